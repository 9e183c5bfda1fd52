#include <cctype>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cdcv/error.hpp"
#include "cdcv/verilog.hpp"

namespace cdcv::rtl {

Expr Expr::ident(std::string n, int line) {
    Expr e;
    e.kind = Kind::Ident;
    e.name = std::move(n);
    e.line = line;
    return e;
}

Expr Expr::number(std::uint64_t v, int width, int line) {
    Expr e;
    e.kind = Kind::Number;
    e.value = v;
    e.width = width;
    e.line = line;
    return e;
}

Expr Expr::op(Kind k, std::vector<Expr> args, int line) {
    Expr e;
    e.kind = k;
    e.args = std::move(args);
    e.line = line;
    return e;
}

bool operator==(const Expr& a, const Expr& b) {
    return a.kind == b.kind && a.name == b.name && a.value == b.value && a.width == b.width && a.msb == b.msb &&
           a.lsb == b.lsb && a.args == b.args;
}

namespace {

enum class Tok { Ident, Number, Punct, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    int line = 1;
    int col = 1;
};

const std::set<std::string> kUnsupportedKeywords = {
    "initial",   "function", "task",       "generate", "parameter", "localparam", "integer",
    "genvar",    "real",     "time",       "specify",  "always_ff", "always_comb", "always_latch",
    "case",      "casez",    "casex",      "for",      "while",     "repeat",     "forever",
    "fork",      "join",     "tri",        "supply0",  "supply1",   "logic",      "assert",
    "primitive", "table",    "endfunction", "endtask", "endcase",   "endgenerate", "wait",
    "defparam",  "event",    "signed",     "force",    "release",   "deassign",   "disable"};

class Lexer {
public:
    Lexer(std::string_view text, std::string origin) : src_(text), origin_(std::move(origin)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_space();
            Token t;
            t.line = line_;
            t.col = col_;
            if (pos_ >= src_.size()) {
                t.kind = Tok::End;
                out.push_back(t);
                return out;
            }
            char c = src_[pos_];
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
                t.kind = Tok::Ident;
                while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                              src_[pos_] == '_' || src_[pos_] == '$'))
                    t.text += advance();
            } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '\'') {
                t.kind = Tok::Number;
                lex_number(t);
            } else if (c == '`') {
                throw ParseError("UnsupportedConstruct", origin_, line_, col_, "compiler directive");
            } else if (c == '"') {
                throw ParseError("UnsupportedConstruct", origin_, line_, col_, "string literal");
            } else {
                t.kind = Tok::Punct;
                static const char* two[] = {"<=", "==", "!=", "&&", "||", ">>", "<<", "**", "(*", "*)"};
                for (const char* p : two) {
                    if (src_.substr(pos_, 2) == p) {
                        t.text = p;
                        advance();
                        advance();
                        break;
                    }
                }
                if (t.text.empty()) {
                    if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) > 0x7e)
                        throw ParseError("SyntaxError", origin_, line_, col_, "unexpected byte");
                    t.text = std::string(1, advance());
                }
            }
            out.push_back(std::move(t));
        }
    }

private:
    char advance() {
        char c = src_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void skip_space() {
        while (pos_ < src_.size()) {
            char c = src_[pos_];
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
                advance();
            } else if (src_.substr(pos_, 2) == "//") {
                while (pos_ < src_.size() && src_[pos_] != '\n') advance();
            } else if (src_.substr(pos_, 2) == "/*") {
                int l = line_, cl = col_;
                advance();
                advance();
                while (pos_ < src_.size() && src_.substr(pos_, 2) != "*/") advance();
                if (pos_ >= src_.size()) throw ParseError("SyntaxError", origin_, l, cl, "unterminated comment");
                advance();
                advance();
            } else {
                break;
            }
        }
    }

    void lex_number(Token& t) {
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_' || src_[pos_] == '\''))
            t.text += advance();
    }

    std::string_view src_;
    std::string origin_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

// Generic statement tree, canonicalized into SeqBlock after parsing.
struct Stmt {
    enum class Kind { Block, If, NonBlocking } kind = Kind::Block;
    std::vector<Stmt> body; // Block
    Expr cond;              // If
    std::vector<Stmt> then_branch, else_branch;
    bool has_else = false;
    Assign assign; // NonBlocking
    int line = 0;
};

class Parser {
public:
    Parser(std::vector<Token> toks, std::string origin) : toks_(std::move(toks)), origin_(std::move(origin)) {}

    std::vector<ParsedModule> run() {
        std::vector<ParsedModule> mods;
        std::set<std::string> names;
        while (peek().kind != Tok::End) {
            if (is_kw("module") || is_kw("macromodule")) {
                int line = peek().line, col = peek().col;
                auto m = parse_module();
                if (!names.insert(m.name).second)
                    throw ParseError("DuplicateModule", origin_, line, col, "module " + m.name + " defined twice");
                mods.push_back(std::move(m));
            } else {
                unsupported_or_fail("'module'");
            }
        }
        return mods;
    }

private:
    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool is_kw(const char* kw) const { return peek().kind == Tok::Ident && peek().text == kw; }
    bool is_punct(const char* p) const { return peek().kind == Tok::Punct && peek().text == p; }

    [[noreturn]] void fail(const std::string& expected) const {
        const Token& t = peek();
        std::string got = t.kind == Tok::End ? "end of input" : "'" + t.text + "'";
        throw ParseError("SyntaxError", origin_, t.line, t.col, "expected " + expected + ", got " + got);
    }

    [[noreturn]] void unsupported_or_fail(const std::string& expected) const {
        const Token& t = peek();
        if (t.kind == Tok::Ident && kUnsupportedKeywords.count(t.text))
            throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, t.text);
        if (t.kind == Tok::Punct && (t.text == "#" || t.text == "(*"))
            throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, t.text == "#" ? "delay" : "attribute");
        fail(expected);
    }

    void expect_punct(const char* p) {
        if (!is_punct(p)) unsupported_or_fail(std::string("'") + p + "'");
        next();
    }
    void expect_kw(const char* kw) {
        if (!is_kw(kw)) unsupported_or_fail(std::string("'") + kw + "'");
        next();
    }
    std::string expect_ident(const char* what = "identifier") {
        if (peek().kind != Tok::Ident || kUnsupportedKeywords.count(peek().text) || reserved(peek().text))
            unsupported_or_fail(what);
        return next().text;
    }

    static bool reserved(const std::string& s) {
        static const std::set<std::string> kw = {"module", "endmodule", "input",  "output", "inout", "wire",
                                                 "reg",    "assign",    "always", "posedge", "negedge", "or",
                                                 "begin",  "end",       "if",     "else"};
        return kw.count(s) > 0;
    }

    unsigned parse_uint(const char* what) {
        if (peek().kind != Tok::Number) fail(what);
        const Token& t = next();
        for (char c : t.text)
            if (!std::isdigit(static_cast<unsigned char>(c)))
                throw ParseError("SyntaxError", origin_, t.line, t.col, std::string("expected ") + what);
        if (t.text.size() > 9) throw ParseError("SyntaxError", origin_, t.line, t.col, "number too large");
        return static_cast<unsigned>(std::stoul(t.text));
    }

    std::optional<unsigned> parse_range() {
        if (!is_punct("[")) return std::nullopt;
        const Token& open = next();
        unsigned msb = parse_uint("range msb");
        expect_punct(":");
        unsigned lsb = parse_uint("range lsb");
        expect_punct("]");
        if (lsb != 0)
            throw ParseError("UnsupportedConstruct", origin_, open.line, open.col, "range with nonzero lsb");
        if (msb + 1 > kMaxWidth)
            throw ParseError("UnsupportedConstruct", origin_, open.line, open.col, "vector wider than 64 bits");
        return msb + 1;
    }

    ParsedModule parse_module() {
        ParsedModule m;
        m.origin = origin_;
        m.line = peek().line;
        next();
        m.name = expect_ident("module name");
        if (is_punct("#")) throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "parameters");
        if (is_punct("(")) {
            next();
            if (!is_punct(")")) {
                PortDir dir = PortDir::In;
                bool is_reg = false;
                unsigned width = 1;
                bool have_dir = false;
                for (;;) {
                    int line = peek().line;
                    if (is_kw("input") || is_kw("output") || is_kw("inout")) {
                        if (is_kw("inout"))
                            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "inout port");
                        dir = next().text == "input" ? PortDir::In : PortDir::Out;
                        is_reg = false;
                        if (is_kw("wire")) next();
                        else if (is_kw("reg")) {
                            next();
                            is_reg = true;
                        }
                        width = parse_range().value_or(1);
                        have_dir = true;
                    } else if (!have_dir) {
                        throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col,
                                         "non-ANSI port list");
                    }
                    if (is_reg && dir == PortDir::In)
                        throw ParseError("SyntaxError", origin_, line, 1, "input port declared reg");
                    PortDecl p;
                    p.line = peek().line;
                    p.name = expect_ident("port name");
                    p.dir = dir;
                    p.width = width;
                    p.is_reg = is_reg;
                    m.ports.push_back(p);
                    if (is_punct(",")) {
                        next();
                        continue;
                    }
                    break;
                }
            }
            expect_punct(")");
        }
        expect_punct(";");
        while (!is_kw("endmodule")) {
            if (peek().kind == Tok::End) fail("'endmodule'");
            parse_item(m);
        }
        next();
        check_declared(m);
        return m;
    }

    void parse_item(ParsedModule& m) {
        if (is_kw("wire") || is_kw("reg")) {
            bool is_reg = next().text == "reg";
            unsigned width = parse_range().value_or(1);
            for (;;) {
                NetDecl d;
                d.line = peek().line;
                d.name = expect_ident("net name");
                d.width = width;
                d.is_reg = is_reg;
                m.decls.push_back(d);
                if (!is_reg && is_punct("=")) {
                    next();
                    Assign a;
                    a.line = d.line;
                    a.target = d.name;
                    a.value = parse_expr();
                    m.assigns.push_back(std::move(a));
                }
                if (is_punct(",")) {
                    next();
                    continue;
                }
                break;
            }
            expect_punct(";");
        } else if (is_kw("assign")) {
            Assign a;
            a.line = next().line;
            if (is_punct("{"))
                throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "concatenation target");
            a.target = expect_ident("assignment target");
            if (is_punct("["))
                throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "part-select target");
            expect_punct("=");
            a.value = parse_expr();
            expect_punct(";");
            m.assigns.push_back(std::move(a));
        } else if (is_kw("always")) {
            m.blocks.push_back(parse_always());
        } else if (is_kw("input") || is_kw("output") || is_kw("inout")) {
            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "non-ANSI port declaration");
        } else if (peek().kind == Tok::Ident && !reserved(peek().text) && !kUnsupportedKeywords.count(peek().text)) {
            m.instances.push_back(parse_instance());
        } else {
            unsupported_or_fail("module item");
        }
    }

    Instance parse_instance() {
        Instance inst;
        inst.line = peek().line;
        inst.module = next().text;
        if (is_punct("#")) throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "parameters");
        inst.name = expect_ident("instance name");
        expect_punct("(");
        if (!is_punct(")")) {
            for (;;) {
                if (!is_punct("."))
                    throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col,
                                     "positional port connection");
                next();
                Connection c;
                c.port = expect_ident("port name");
                expect_punct("(");
                if (!is_punct(")")) c.expr = parse_expr();
                expect_punct(")");
                inst.connections.push_back(std::move(c));
                if (is_punct(",")) {
                    next();
                    continue;
                }
                break;
            }
        }
        expect_punct(")");
        expect_punct(";");
        return inst;
    }

    SeqBlock parse_always() {
        SeqBlock b;
        const Token& kw = next();
        b.line = kw.line;
        expect_punct("@");
        if (is_punct("*"))
            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "combinational always");
        expect_punct("(");
        if (is_punct("*"))
            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "combinational always");
        if (is_kw("negedge"))
            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "negedge clock");
        if (!is_kw("posedge"))
            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "combinational always");
        next();
        b.clock = expect_ident("clock name");
        if (is_kw("or") || is_punct(",")) {
            next();
            bool neg;
            if (is_kw("negedge")) neg = true;
            else if (is_kw("posedge")) neg = false;
            else fail("'posedge' or 'negedge'");
            next();
            b.reset = ResetSpec{expect_ident("reset name"), neg};
            if (is_kw("or") || is_punct(","))
                throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col,
                                 "more than one asynchronous event");
        }
        expect_punct(")");
        Stmt body = parse_stmt(0);
        canonicalize(b, body);
        return b;
    }

    Stmt parse_stmt(int depth) {
        if (depth > 64) throw ParseError("SyntaxError", origin_, peek().line, peek().col, "nesting too deep");
        Stmt s;
        s.line = peek().line;
        if (is_kw("begin")) {
            next();
            if (is_punct(":"))
                throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "named block");
            s.kind = Stmt::Kind::Block;
            while (!is_kw("end")) {
                if (peek().kind == Tok::End) fail("'end'");
                s.body.push_back(parse_stmt(depth + 1));
            }
            next();
        } else if (is_kw("if")) {
            next();
            s.kind = Stmt::Kind::If;
            expect_punct("(");
            s.cond = parse_expr();
            expect_punct(")");
            s.then_branch.push_back(parse_stmt(depth + 1));
            if (is_kw("else")) {
                next();
                s.has_else = true;
                s.else_branch.push_back(parse_stmt(depth + 1));
            }
        } else if (peek().kind == Tok::Ident && !reserved(peek().text) && !kUnsupportedKeywords.count(peek().text)) {
            s.kind = Stmt::Kind::NonBlocking;
            s.assign.line = peek().line;
            s.assign.target = next().text;
            if (is_punct("["))
                throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "part-select target");
            if (is_punct("="))
                throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "blocking assignment");
            expect_punct("<=");
            if (is_punct("#")) throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "delay");
            s.assign.value = parse_expr();
            expect_punct(";");
        } else {
            unsupported_or_fail("statement");
        }
        return s;
    }

    // Flatten a statement into a plain list of nonblocking assignments.
    void collect_assigns(const Stmt& s, std::vector<Assign>& out) {
        switch (s.kind) {
        case Stmt::Kind::NonBlocking: out.push_back(s.assign); break;
        case Stmt::Kind::Block:
            for (const auto& c : s.body) collect_assigns(c, out);
            break;
        case Stmt::Kind::If:
            throw ParseError("UnsupportedConstruct", origin_, s.line, 1, "nested if in sequential block");
        }
    }

    static const Stmt& unwrap(const Stmt& s) {
        const Stmt* p = &s;
        while (p->kind == Stmt::Kind::Block && p->body.size() == 1) p = &p->body.front();
        return *p;
    }

    void canonicalize_functional(SeqBlock& b, const Stmt& s) {
        const Stmt& u = unwrap(s);
        if (u.kind == Stmt::Kind::If) {
            if (u.has_else)
                throw ParseError("UnsupportedConstruct", origin_, u.line, 1, "if/else in sequential block");
            b.enable = u.cond;
            collect_assigns(u.then_branch.front(), b.assigns);
        } else {
            collect_assigns(u, b.assigns);
        }
    }

    void canonicalize(SeqBlock& b, const Stmt& body) {
        if (!b.reset) {
            canonicalize_functional(b, body);
            return;
        }
        const Stmt& u = unwrap(body);
        if (u.kind != Stmt::Kind::If || !u.has_else)
            throw ParseError("UnsupportedConstruct", origin_, u.line, 1, "asynchronous reset without reset arm");
        const Expr& c = u.cond;
        bool ok;
        if (b.reset->active_low)
            ok = (c.kind == Expr::Kind::LogicNot || c.kind == Expr::Kind::Not) && c.args.size() == 1 &&
                 c.args[0].kind == Expr::Kind::Ident && c.args[0].name == b.reset->name;
        else
            ok = c.kind == Expr::Kind::Ident && c.name == b.reset->name;
        if (!ok)
            throw ParseError("UnsupportedConstruct", origin_, u.line, 1,
                             "reset condition must test " + b.reset->name + " with matching polarity");
        collect_assigns(u.then_branch.front(), b.reset_assigns);
        canonicalize_functional(b, u.else_branch.front());
    }

    // --- expressions -------------------------------------------------------

    Expr parse_expr() { return parse_ternary(0); }

    void guard(int depth) {
        if (depth > 200) throw ParseError("SyntaxError", origin_, peek().line, peek().col, "nesting too deep");
    }

    Expr parse_ternary(int depth) {
        guard(depth);
        int line = peek().line;
        Expr c = parse_binary(0, depth + 1);
        if (is_punct("?")) {
            next();
            Expr t = parse_ternary(depth + 1);
            expect_punct(":");
            Expr f = parse_ternary(depth + 1);
            return Expr::op(Expr::Kind::Ternary, {std::move(c), std::move(t), std::move(f)}, line);
        }
        return c;
    }

    // level 0: |, level 1: ^, level 2: &
    Expr parse_binary(int level, int depth) {
        guard(depth);
        if (level == 3) return parse_unary(depth + 1);
        static const char* ops[] = {"|", "^", "&"};
        static const Expr::Kind kinds[] = {Expr::Kind::Or, Expr::Kind::Xor, Expr::Kind::And};
        int line = peek().line;
        Expr lhs = parse_binary(level + 1, depth + 1);
        if (!is_punct(ops[level])) {
            reject_unsupported_operator();
            return lhs;
        }
        std::vector<Expr> args{std::move(lhs)};
        while (is_punct(ops[level])) {
            next();
            args.push_back(parse_binary(level + 1, depth + 1));
        }
        return Expr::op(kinds[level], std::move(args), line);
    }

    void reject_unsupported_operator() {
        static const std::set<std::string> bad = {"+", "-", "*", "/", "%", "==", "!=", "&&", "||",
                                                  "<<", ">>", "<", ">", "**"};
        if (peek().kind == Tok::Punct && bad.count(peek().text))
            throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col,
                             "operator '" + peek().text + "'");
    }

    Expr parse_unary(int depth) {
        guard(depth);
        int line = peek().line;
        if (is_punct("~")) {
            next();
            return Expr::op(Expr::Kind::Not, {parse_unary(depth + 1)}, line);
        }
        if (is_punct("!")) {
            next();
            return Expr::op(Expr::Kind::LogicNot, {parse_unary(depth + 1)}, line);
        }
        return parse_primary(depth + 1);
    }

    Expr parse_primary(int depth) {
        guard(depth);
        const Token& t = peek();
        int line = t.line;
        if (is_punct("(")) {
            next();
            Expr e = parse_ternary(depth + 1);
            expect_punct(")");
            return e;
        }
        if (is_punct("{")) {
            next();
            std::vector<Expr> parts;
            for (;;) {
                parts.push_back(parse_ternary(depth + 1));
                if (is_punct("{"))
                    throw ParseError("UnsupportedConstruct", origin_, peek().line, peek().col, "replication");
                if (is_punct(",")) {
                    next();
                    continue;
                }
                break;
            }
            expect_punct("}");
            return Expr::op(Expr::Kind::Concat, std::move(parts), line);
        }
        if (t.kind == Tok::Number) return parse_number();
        if (t.kind == Tok::Ident && !reserved(t.text) && !kUnsupportedKeywords.count(t.text)) {
            if (t.text[0] == '$')
                throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, "system function " + t.text);
            std::string name = next().text;
            if (is_punct("(")) throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, "function call");
            if (is_punct("[")) {
                next();
                unsigned msb = parse_uint("bit index");
                if (is_punct(":")) {
                    next();
                    unsigned lsb = parse_uint("bit index");
                    expect_punct("]");
                    if (lsb > msb) throw ParseError("SyntaxError", origin_, line, t.col, "reversed part-select");
                    Expr e = Expr::ident(name, line);
                    e.kind = Expr::Kind::Slice;
                    e.msb = msb;
                    e.lsb = lsb;
                    return e;
                }
                expect_punct("]");
                Expr e = Expr::ident(name, line);
                e.kind = Expr::Kind::Index;
                e.msb = msb;
                return e;
            }
            return Expr::ident(name, line);
        }
        unsupported_or_fail("expression");
    }

    Expr parse_number() {
        const Token& t = next();
        const std::string& s = t.text;
        auto bad = [&](const char* why) -> ParseError {
            return ParseError("SyntaxError", origin_, t.line, t.col, std::string(why) + " '" + s + "'");
        };
        auto tick = s.find('\'');
        int width = -1;
        std::string digits;
        int base = 10;
        if (tick == std::string::npos) {
            digits = s;
        } else {
            if (tick > 0) {
                std::string w = s.substr(0, tick);
                for (char c : w)
                    if (!std::isdigit(static_cast<unsigned char>(c))) throw bad("malformed size in");
                if (w.size() > 3) throw bad("size too large in");
                width = std::stoi(w);
                if (width < 1 || width > static_cast<int>(kMaxWidth))
                    throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, "literal width " + w);
            }
            if (tick + 1 >= s.size()) throw bad("missing base in");
            char b = static_cast<char>(std::tolower(static_cast<unsigned char>(s[tick + 1])));
            if (b == 's') throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, "signed literal");
            if (b == 'b') base = 2;
            else if (b == 'h') base = 16;
            else if (b == 'd') base = 10;
            else if (b == 'o') base = 8;
            else throw bad("unknown base in");
            digits = s.substr(tick + 2);
        }
        if (digits.empty()) throw bad("missing digits in");
        std::uint64_t v = 0;
        bool any = false;
        for (char c : digits) {
            if (c == '_') continue;
            char lc = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (lc == 'x' || lc == 'z' || lc == '?')
                throw ParseError("UnsupportedConstruct", origin_, t.line, t.col, "x/z literal");
            int d;
            if (lc >= '0' && lc <= '9') d = lc - '0';
            else if (lc >= 'a' && lc <= 'f') d = lc - 'a' + 10;
            else throw bad("malformed digits in");
            if (d >= base) throw bad("digit out of range in");
            if (v > (~std::uint64_t{0} - static_cast<std::uint64_t>(d)) / static_cast<std::uint64_t>(base))
                throw bad("value too large in");
            v = v * static_cast<std::uint64_t>(base) + static_cast<std::uint64_t>(d);
            any = true;
        }
        if (!any) throw bad("missing digits in");
        if (width > 0 && (v & ~width_mask(static_cast<unsigned>(width))) != 0) throw bad("value exceeds size in");
        return Expr::number(v, width, t.line);
    }

    // --- declaration checks -------------------------------------------------

    void check_declared(const ParsedModule& m) {
        std::map<std::string, bool> is_reg; // name -> reg
        auto declare = [&](const std::string& n, bool reg, int line) {
            if (!is_reg.emplace(n, reg).second)
                throw ParseError("SyntaxError", origin_, line, 1, "'" + n + "' declared twice");
        };
        for (const auto& p : m.ports) declare(p.name, p.is_reg, p.line);
        for (const auto& d : m.decls) declare(d.name, d.is_reg, d.line);
        std::function<void(const Expr&)> use = [&](const Expr& e) {
            if (e.kind == Expr::Kind::Ident || e.kind == Expr::Kind::Index || e.kind == Expr::Kind::Slice)
                if (!is_reg.count(e.name))
                    throw ParseError("UndeclaredIdentifier", origin_, e.line, 1, "'" + e.name + "' is not declared");
            for (const auto& a : e.args) use(a);
        };
        auto target = [&](const Assign& a, bool want_reg) {
            auto it = is_reg.find(a.target);
            if (it == is_reg.end())
                throw ParseError("UndeclaredIdentifier", origin_, a.line, 1, "'" + a.target + "' is not declared");
            if (it->second != want_reg)
                throw ParseError("SyntaxError", origin_, a.line, 1,
                                 want_reg ? "nonblocking target '" + a.target + "' is not a reg"
                                          : "continuous assignment to reg '" + a.target + "'");
            use(a.value);
        };
        for (const auto& a : m.assigns) target(a, false);
        for (const auto& b : m.blocks) {
            use(Expr::ident(b.clock, b.line));
            if (b.reset) use(Expr::ident(b.reset->name, b.line));
            if (b.enable) use(*b.enable);
            for (const auto& a : b.reset_assigns) target(a, true);
            for (const auto& a : b.assigns) target(a, true);
        }
        for (const auto& i : m.instances)
            for (const auto& c : i.connections)
                if (c.expr) use(*c.expr);
    }

    std::vector<Token> toks_;
    std::string origin_;
    std::size_t pos_ = 0;
};

} // namespace

std::vector<ParsedModule> parse_verilog(std::string_view text, const std::string& origin) {
    Lexer lex(text, origin);
    Parser p(lex.run(), origin);
    return p.run();
}

// ---------------------------------------------------------------------------
// Pretty printer

namespace {

std::string print(const Expr& e, int parent_prec);

int prec(Expr::Kind k) {
    switch (k) {
    case Expr::Kind::Ternary: return 0;
    case Expr::Kind::Or: return 1;
    case Expr::Kind::Xor: return 2;
    case Expr::Kind::And: return 3;
    case Expr::Kind::Not:
    case Expr::Kind::LogicNot: return 4;
    default: return 5;
    }
}

std::string print(const Expr& e, int parent_prec) {
    std::string s;
    switch (e.kind) {
    case Expr::Kind::Ident: return e.name;
    case Expr::Kind::Index: return e.name + "[" + std::to_string(e.msb) + "]";
    case Expr::Kind::Slice: return e.name + "[" + std::to_string(e.msb) + ":" + std::to_string(e.lsb) + "]";
    case Expr::Kind::Number:
        if (e.width < 0) return std::to_string(e.value);
        return std::to_string(e.width) + "'d" + std::to_string(e.value);
    case Expr::Kind::Not: s = "~" + print(e.args[0], 4); break;
    case Expr::Kind::LogicNot: s = "!" + print(e.args[0], 4); break;
    case Expr::Kind::And:
    case Expr::Kind::Or:
    case Expr::Kind::Xor: {
        const char* op = e.kind == Expr::Kind::And ? " & " : e.kind == Expr::Kind::Or ? " | " : " ^ ";
        int p = prec(e.kind);
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) s += op;
            // Left-assoc chains are flattened by the parser; parenthesize nested same-kind operands.
            s += print(e.args[i], p + 1);
        }
        break;
    }
    case Expr::Kind::Ternary:
        s = print(e.args[0], 1) + " ? " + print(e.args[1], 0) + " : " + print(e.args[2], 0);
        break;
    case Expr::Kind::Concat:
        s = "{";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) s += ", ";
            s += print(e.args[i], 0);
        }
        return s + "}";
    }
    if (prec(e.kind) < parent_prec || (e.kind == Expr::Kind::Ternary && parent_prec > 0)) return "(" + s + ")";
    return s;
}

std::string range(unsigned width) { return width > 1 ? "[" + std::to_string(width - 1) + ":0] " : ""; }

} // namespace

std::string to_verilog(const Expr& e) { return print(e, 0); }

std::string to_verilog(const ParsedModule& m) {
    std::ostringstream os;
    os << "module " << m.name << "(";
    for (std::size_t i = 0; i < m.ports.size(); ++i) {
        const auto& p = m.ports[i];
        os << (i ? ",\n    " : "\n    ") << (p.dir == PortDir::In ? "input " : "output ") << (p.is_reg ? "reg " : "")
           << range(p.width) << p.name;
    }
    os << ");\n";
    for (const auto& d : m.decls) os << "  " << (d.is_reg ? "reg " : "wire ") << range(d.width) << d.name << ";\n";
    for (const auto& a : m.assigns) os << "  assign " << a.target << " = " << to_verilog(a.value) << ";\n";
    for (const auto& b : m.blocks) {
        os << "  always @(posedge " << b.clock;
        if (b.reset) os << " or " << (b.reset->active_low ? "negedge " : "posedge ") << b.reset->name;
        os << ") begin\n";
        std::string indent = "    ";
        if (b.reset) {
            os << indent << "if (" << (b.reset->active_low ? "!" : "") << b.reset->name << ") begin\n";
            for (const auto& a : b.reset_assigns) os << indent << "  " << a.target << " <= " << to_verilog(a.value) << ";\n";
            os << indent << "end else begin\n";
            indent += "  ";
        }
        if (b.enable) {
            os << indent << "if (" << to_verilog(*b.enable) << ") begin\n";
            for (const auto& a : b.assigns) os << indent << "  " << a.target << " <= " << to_verilog(a.value) << ";\n";
            os << indent << "end\n";
        } else {
            for (const auto& a : b.assigns) os << indent << a.target << " <= " << to_verilog(a.value) << ";\n";
        }
        if (b.reset) os << "    end\n";
        os << "  end\n";
    }
    for (const auto& i : m.instances) {
        os << "  " << i.module << " " << i.name << " (";
        for (std::size_t k = 0; k < i.connections.size(); ++k) {
            const auto& c = i.connections[k];
            os << (k ? ", " : "") << "." << c.port << "(" << (c.expr ? to_verilog(*c.expr) : "") << ")";
        }
        os << ");\n";
    }
    os << "endmodule\n";
    return os.str();
}

} // namespace cdcv::rtl
