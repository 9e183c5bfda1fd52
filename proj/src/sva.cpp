// Lint and interpreter for the generated SystemVerilog subset.
#include <algorithm>
#include <cctype>
#include <memory>
#include <set>

#include "cdcv/codegen.hpp"
#include "cdcv/error.hpp"

namespace cdcv {
namespace {

struct Tok {
    enum Kind { Id, Sys, Num, Sym, End } kind = End;
    std::string text;
    int line = 0;
    std::uint64_t value = 0;
    unsigned width = 32;
};

std::vector<Tok> lex(const std::string& src, const std::string& file) {
    std::vector<Tok> out;
    int line = 1;
    std::size_t i = 0;
    auto err = [&](const std::string& m) { throw Error("SvaError", file + ":" + std::to_string(line) + ": " + m); };
    while (i < src.size()) {
        char c = src[i];
        if (c == '\n') {
            ++line;
            ++i;
        } else if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
            while (i < src.size() && src[i] != '\n') ++i;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$') {
            std::size_t j = i + 1;
            while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
            out.push_back({c == '$' ? Tok::Sys : Tok::Id, src.substr(i, j - i), line});
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            std::uint64_t v = 0;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) v = v * 10 + (src[j++] - '0');
            Tok t{Tok::Num, "", line, v, 32};
            if (j < src.size() && src[j] == '\'') {
                if (v == 0 || v > 64) err("bad literal width");
                t.width = static_cast<unsigned>(v);
                char base = j + 1 < src.size() ? static_cast<char>(std::tolower(src[j + 1])) : 0;
                unsigned radix = base == 'b' ? 2 : base == 'd' ? 10 : base == 'h' ? 16 : 0;
                if (!radix) err("bad literal base");
                j += 2;
                std::size_t s = j;
                v = 0;
                while (j < src.size() && std::isxdigit(static_cast<unsigned char>(src[j]))) {
                    unsigned d = std::isdigit(static_cast<unsigned char>(src[j]))
                                     ? src[j] - '0'
                                     : std::tolower(src[j]) - 'a' + 10;
                    if (d >= radix) err("bad literal digit");
                    v = v * radix + d;
                    ++j;
                }
                if (j == s) err("empty literal");
            }
            t.value = v;
            t.text = src.substr(i, j - i);
            out.push_back(t);
            i = j;
        } else {
            static const char* multi[] = {"|->", "|=>", "&&", "||", "==", "!="};
            std::string sym(1, c);
            for (const char* m : multi)
                if (src.compare(i, std::char_traits<char>::length(m), m) == 0) {
                    sym = m;
                    break;
                }
            out.push_back({Tok::Sym, sym, line});
            i += sym.size();
        }
    }
    out.push_back({Tok::End, "", line});
    return out;
}

const std::set<std::string> kKeywords = {"module",  "endmodule", "input",  "logic",      "property",
                                         "endproperty", "assert", "posedge", "disable",  "iff",
                                         "covergroup",  "endgroup", "coverpoint", "bins", "option",
                                         "new",     "bind"};

struct PortDecl {
    std::string name;
    unsigned width = 1;
};

struct ModuleInfo {
    std::string name;
    std::vector<PortDecl> ports;
    std::set<std::string> declared;
};

} // namespace

std::vector<LintIssue> lint_generated(const std::vector<GeneratedFile>& files, const Netlist& nl) {
    std::vector<LintIssue> issues;
    std::map<std::string, ModuleInfo> modules;
    const GeneratedFile* bind = nullptr;

    for (const auto& f : files) {
        auto issue = [&](int line, const std::string& m) { issues.push_back({f.path, line, m}); };
        if (f.text.rfind("// generated-by cdcv ", 0) != 0) issue(1, "missing generated-by header");
        if (f.generator == "bind") {
            bind = &f;
            continue;
        }
        std::vector<Tok> t;
        try {
            t = lex(f.text, f.path);
        } catch (const Error& e) {
            issue(0, e.what());
            continue;
        }
        std::vector<std::string> blocks;
        std::string brackets;
        ModuleInfo* mod = nullptr;
        std::vector<std::pair<const Tok*, std::string>> used;
        for (std::size_t i = 0; i + 1 < t.size(); ++i) {
            const Tok& k = t[i];
            if (k.kind == Tok::Sym) {
                const std::string& s = k.text;
                if (s == "(" || s == "[" || s == "{") brackets.push_back(s[0]);
                if (s == ")" || s == "]" || s == "}") {
                    char open = s == ")" ? '(' : s == "]" ? '[' : '{';
                    if (brackets.empty() || brackets.back() != open)
                        issue(k.line, "unbalanced '" + s + "'");
                    else
                        brackets.pop_back();
                }
                continue;
            }
            if (k.kind != Tok::Id) continue;
            const std::string& s = k.text;
            const Tok& nx = t[i + 1];
            if (s == "property" && i > 0 && t[i - 1].text == "assert") continue;
            if (s == "module" || s == "property" || s == "covergroup") {
                blocks.push_back(s);
                if (nx.kind != Tok::Id) {
                    issue(k.line, s + " without a name");
                    continue;
                }
                if (s == "module") {
                    mod = &modules[nx.text];
                    if (!mod->name.empty()) issue(k.line, "module " + nx.text + " defined twice");
                    mod->name = nx.text;
                } else if (mod) {
                    mod->declared.insert(nx.text);
                }
                ++i;
                continue;
            }
            if (s == "endmodule" || s == "endproperty" || s == "endgroup") {
                std::string want = s == "endgroup" ? "covergroup" : s.substr(3);
                if (blocks.empty() || blocks.back() != want)
                    issue(k.line, s + " does not close a " + want);
                else
                    blocks.pop_back();
                if (s == "endmodule") mod = nullptr;
                continue;
            }
            if (!mod) {
                issue(k.line, "'" + s + "' outside a module");
                continue;
            }
            if (s == "input") {
                std::size_t j = i + 1;
                if (t[j].text == "logic") ++j;
                unsigned w = 1;
                if (t[j].text == "[") {
                    if (t[j + 1].kind == Tok::Num) w = static_cast<unsigned>(t[j + 1].value) + 1;
                    while (t[j].kind != Tok::End && t[j].text != "]") ++j;
                    ++j;
                }
                if (t[j].kind != Tok::Id) {
                    issue(k.line, "port without a name");
                    continue;
                }
                mod->ports.push_back({t[j].text, w});
                mod->declared.insert(t[j].text);
                i = j;
                continue;
            }
            if (s == "bins") {
                if (nx.kind == Tok::Id) mod->declared.insert(nx.text), ++i;
                continue;
            }
            if (kKeywords.count(s)) continue;
            if (i > 0 && t[i - 1].text == ".") continue; // option member
            if (nx.text == ":" && (brackets.empty() || brackets.back() != '[')) {
                mod->declared.insert(s); // label
                continue;
            }
            if (nx.kind == Tok::Id && t[i + 2].text == "=" && t[i + 3].text == "new") {
                used.emplace_back(&k, mod->name);
                mod->declared.insert(nx.text); // covergroup instance
                ++i;
                continue;
            }
            used.emplace_back(&k, mod->name);
        }
        if (!blocks.empty()) issue(t.back().line, "unclosed " + blocks.back());
        if (!brackets.empty()) issue(t.back().line, "unbalanced brackets");
        for (const auto& [u, m] : used)
            if (!modules[m].declared.count(u->text)) issue(u->line, "undeclared identifier '" + u->text + "'");
        if (!f.module.empty() && !modules.count(f.module)) issue(0, "module " + f.module + " not defined");
    }

    if (bind) {
        auto issue = [&](int line, const std::string& m) { issues.push_back({bind->path, line, m}); };
        std::vector<Tok> t;
        try {
            t = lex(bind->text, bind->path);
        } catch (const Error& e) {
            issue(0, e.what());
            return issues;
        }
        std::size_t i = 0;
        auto expect = [&](const std::string& s) {
            if (t[i].text != s) {
                issue(t[i].line, "expected '" + s + "', got '" + t[i].text + "'");
                return false;
            }
            ++i;
            return true;
        };
        while (t[i].kind != Tok::End) {
            if (!expect("bind")) return issues;
            int line = t[i].line;
            if (t[i].text != nl.name) issue(line, "bind target '" + t[i].text + "' is not the top module");
            const std::string& mname = t[i + 1].text;
            auto mit = modules.find(mname);
            if (mit == modules.end()) issue(line, "bound module '" + mname + "' is not generated");
            i += 3;
            if (!expect("(")) return issues;
            while (t[i].text == ".") {
                std::string port = t[i + 1].text;
                i += 2;
                if (!expect("(")) return issues;
                std::string sig;
                while (t[i].kind != Tok::End && t[i].text != ")") sig += t[i++].text;
                if (!expect(")")) return issues;
                if (mit != modules.end() &&
                    std::none_of(mit->second.ports.begin(), mit->second.ports.end(),
                                 [&](const PortDecl& p) { return p.name == port; }))
                    issue(line, "module " + mname + " has no port " + port);
                if (!nl.find_net(sig)) issue(line, "signal '" + sig + "' not in the netlist");
                if (t[i].text == ",") ++i;
            }
            if (!expect(")") || !expect(";")) return issues;
        }
    }
    return issues;
}

namespace {

// ---- interpreter ----

struct Val {
    std::uint64_t v = 0;
    unsigned w = 1;
};

std::uint64_t mask(unsigned w) { return w >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << w) - 1; }

struct Expr {
    enum Op { Port, Const, Not, BitNot, And, Or, BitAnd, BitOr, BitXor, Eq, Ne, Select, Concat, Stable, Rose, Past };
    Op op = Const;
    std::vector<std::unique_ptr<Expr>> kids;
    int port = -1;
    Val c;
    unsigned hi = 0, lo = 0; // Select; Past depth in hi
};

using Samples = std::vector<std::vector<std::uint64_t>>; // [port][k]

struct Evaluator {
    const Samples& s;
    const std::vector<unsigned>& widths;

    Val eval(const Expr& e, std::int64_t k) const {
        if (k < 0) k = 0; // $past before the first sample is the first sample
        switch (e.op) {
        case Expr::Port: return {s[e.port][k], widths[e.port]};
        case Expr::Const: return e.c;
        case Expr::Not: return {eval(*e.kids[0], k).v == 0, 1};
        case Expr::BitNot: {
            Val a = eval(*e.kids[0], k);
            return {~a.v & mask(a.w), a.w};
        }
        case Expr::And: return {eval(*e.kids[0], k).v && eval(*e.kids[1], k).v, 1};
        case Expr::Or: return {eval(*e.kids[0], k).v || eval(*e.kids[1], k).v, 1};
        case Expr::BitAnd:
        case Expr::BitOr:
        case Expr::BitXor:
        case Expr::Eq:
        case Expr::Ne: {
            Val a = eval(*e.kids[0], k), b = eval(*e.kids[1], k);
            unsigned w = std::max(a.w, b.w);
            if (e.op == Expr::Eq) return {a.v == b.v, 1};
            if (e.op == Expr::Ne) return {a.v != b.v, 1};
            std::uint64_t r = e.op == Expr::BitAnd ? a.v & b.v : e.op == Expr::BitOr ? a.v | b.v : a.v ^ b.v;
            return {r, w};
        }
        case Expr::Select: {
            Val a = eval(*e.kids[0], k);
            unsigned w = e.hi - e.lo + 1;
            return {(a.v >> e.lo) & mask(w), w};
        }
        case Expr::Concat: {
            Val r{0, 0};
            for (const auto& kid : e.kids) {
                Val a = eval(*kid, k);
                r.v = (r.w + a.w >= 64 ? r.v << (a.w % 64) : r.v << a.w) | a.v;
                r.w += a.w;
            }
            return r;
        }
        case Expr::Stable: return {eval(*e.kids[0], k).v == eval(*e.kids[0], k - 1).v, 1};
        case Expr::Rose: return {(eval(*e.kids[0], k).v & 1) && !(eval(*e.kids[0], k - 1).v & 1) && k > 0, 1};
        case Expr::Past: return eval(*e.kids[0], k - e.hi);
        }
        return {};
    }
};

struct Property {
    std::string name;
    std::string clock_port;
    std::unique_ptr<Expr> disable, ante, cons;
    bool next = false; // |=>
};

class Parser {
public:
    Parser(const std::vector<Tok>& t, const std::string& file, const std::map<std::string, int>& ports,
           const std::vector<unsigned>& widths)
        : t_(t), file_(file), ports_(ports), widths_(widths) {}

    std::size_t i = 0;

    [[noreturn]] void fail(const std::string& m) const {
        throw Error("SvaError", file_ + ":" + std::to_string(t_[i].line) + ": " + m);
    }
    void expect(const std::string& s) {
        if (t_[i].text != s) fail("expected '" + s + "', got '" + t_[i].text + "'");
        ++i;
    }
    bool accept(const std::string& s) {
        if (t_[i].text != s) return false;
        ++i;
        return true;
    }

    Property property() {
        Property p;
        expect("property");
        p.name = t_[i++].text;
        expect(";");
        expect("@");
        expect("(");
        expect("posedge");
        p.clock_port = t_[i++].text;
        expect(")");
        if (accept("disable")) {
            expect("iff");
            expect("(");
            p.disable = expr();
            expect(")");
        }
        auto e = expr();
        if (t_[i].text == "|->" || t_[i].text == "|=>") {
            p.next = t_[i++].text == "|=>";
            p.ante = std::move(e);
            p.cons = expr();
        } else {
            p.cons = std::move(e);
        }
        expect(";");
        expect("endproperty");
        return p;
    }

private:
    using P = std::unique_ptr<Expr>;
    P make(Expr::Op op, P a, P b = nullptr) {
        auto e = std::make_unique<Expr>();
        e->op = op;
        e->kids.push_back(std::move(a));
        if (b) e->kids.push_back(std::move(b));
        return e;
    }
    P expr() {
        P l = land();
        while (accept("||")) l = make(Expr::Or, std::move(l), land());
        return l;
    }
    P land() {
        P l = eq();
        while (accept("&&")) l = make(Expr::And, std::move(l), eq());
        return l;
    }
    P eq() {
        P l = bor();
        for (;;) {
            if (accept("=="))
                l = make(Expr::Eq, std::move(l), bor());
            else if (accept("!="))
                l = make(Expr::Ne, std::move(l), bor());
            else
                return l;
        }
    }
    P bor() {
        P l = bxor();
        while (accept("|")) l = make(Expr::BitOr, std::move(l), bxor());
        return l;
    }
    P bxor() {
        P l = band();
        while (accept("^")) l = make(Expr::BitXor, std::move(l), band());
        return l;
    }
    P band() {
        P l = unary();
        while (accept("&")) l = make(Expr::BitAnd, std::move(l), unary());
        return l;
    }
    P unary() {
        if (accept("!")) return make(Expr::Not, unary());
        if (accept("~")) return make(Expr::BitNot, unary());
        return postfix(primary());
    }
    P postfix(P e) {
        while (accept("[")) {
            auto num = [&] {
                if (t_[i].kind != Tok::Num) fail("expected a constant index");
                return static_cast<unsigned>(t_[i++].value);
            };
            unsigned hi = num(), lo = hi;
            if (accept(":")) lo = num();
            expect("]");
            if (lo > hi) fail("reversed part select");
            auto s = make(Expr::Select, std::move(e));
            s->hi = hi;
            s->lo = lo;
            e = std::move(s);
        }
        return e;
    }
    P primary() {
        const Tok& k = t_[i];
        if (k.kind == Tok::Num) {
            ++i;
            auto e = std::make_unique<Expr>();
            e->c = {k.value & mask(k.width), k.width};
            return e;
        }
        if (accept("(")) {
            P e = expr();
            expect(")");
            return e;
        }
        if (accept("{")) {
            auto e = std::make_unique<Expr>();
            e->op = Expr::Concat;
            do e->kids.push_back(expr());
            while (accept(","));
            expect("}");
            return e;
        }
        if (k.kind == Tok::Sys) {
            ++i;
            expect("(");
            P arg = expr();
            P e;
            if (k.text == "$stable") {
                e = make(Expr::Stable, std::move(arg));
            } else if (k.text == "$rose") {
                e = make(Expr::Rose, std::move(arg));
            } else if (k.text == "$past") {
                e = make(Expr::Past, std::move(arg));
                e->hi = 1;
                if (accept(",")) {
                    if (t_[i].kind != Tok::Num || t_[i].value == 0) fail("$past depth must be a positive constant");
                    e->hi = static_cast<unsigned>(t_[i++].value);
                }
            } else {
                fail("system function " + k.text + " is outside the template vocabulary");
            }
            expect(")");
            return e;
        }
        if (k.kind == Tok::Id) {
            auto it = ports_.find(k.text);
            if (it == ports_.end()) fail("unknown signal " + k.text);
            ++i;
            auto e = std::make_unique<Expr>();
            e->op = Expr::Port;
            e->port = it->second;
            return e;
        }
        fail("unexpected '" + k.text + "'");
    }

    const std::vector<Tok>& t_;
    std::string file_;
    const std::map<std::string, int>& ports_;
    const std::vector<unsigned>& widths_;
};

std::map<std::string, std::map<std::string, std::string>> parse_binds(const GeneratedFile& f) {
    std::map<std::string, std::map<std::string, std::string>> out;
    auto t = lex(f.text, f.path);
    std::size_t i = 0;
    while (t[i].kind != Tok::End) {
        if (t[i].text != "bind") throw Error("SvaError", f.path + ": expected bind");
        auto& m = out[t[i + 2].text];
        i += 5;
        while (t[i].text == ".") {
            std::string port = t[i + 1].text;
            i += 3;
            std::string sig;
            while (t[i].kind != Tok::End && t[i].text != ")") sig += t[i++].text;
            m[port] = sig;
            ++i;
            if (t[i].text == ",") ++i;
        }
        i += 2;
    }
    return out;
}

} // namespace

std::map<std::string, PropertyVerdict> interpret_assertions(const std::vector<GeneratedFile>& files,
                                                            const Analysis& a, const SimTrace& trace) {
    const Netlist& nl = a.netlist;
    std::map<std::string, std::map<std::string, std::string>> binds;
    for (const auto& f : files)
        if (f.generator == "bind") binds = parse_binds(f);

    std::map<std::string, PropertyVerdict> out;
    for (const auto& f : files) {
        if (f.generator == "bind" || f.generator == "coverage") continue;
        auto t = lex(f.text, f.path);
        std::string module;
        std::map<std::string, int> ports;
        std::vector<NetId> nets;
        std::vector<unsigned> widths;
        std::size_t i = 0;
        while (t[i].kind != Tok::End) {
            if (t[i].text == "module") {
                module = t[i + 1].text;
                ports.clear();
                nets.clear();
                widths.clear();
                i += 2;
                continue;
            }
            if (t[i].text == "input") {
                std::size_t j = i + 1;
                if (t[j].text == "logic") ++j;
                unsigned w = 1;
                if (t[j].text == "[") {
                    w = static_cast<unsigned>(t[j + 1].value) + 1;
                    j += 5;
                }
                const std::string& name = t[j].text;
                auto bm = binds.find(module);
                if (bm == binds.end() || !bm->second.count(name))
                    throw Error("SvaError", f.path + ": port " + name + " is not bound");
                auto n = nl.find_net(bm->second.at(name));
                if (!n) throw Error("SvaError", f.path + ": bound signal " + bm->second.at(name) + " not found");
                ports[name] = static_cast<int>(nets.size());
                nets.push_back(*n);
                widths.push_back(w);
                i = j + 1;
                continue;
            }
            if (t[i].text != "property" || (i > 0 && t[i - 1].text == "assert")) {
                ++i;
                continue;
            }
            Parser p(t, f.path, ports, widths);
            p.i = i;
            Property prop = p.property();
            i = p.i;

            // Samples: pre-edge values at each rising edge of the property's
            // clock.
            auto cp = ports.find(prop.clock_port);
            if (cp == ports.end()) throw Error("SvaError", f.path + ": unknown clock " + prop.clock_port);
            const ClockSpec* clk = nullptr;
            for (const auto& c : a.constraints.clocks)
                if (nl.find_net(c.name) == nets[cp->second]) clk = &c;
            if (!clk) throw Error("SvaError", f.path + ": " + prop.clock_port + " is not a declared clock");
            std::vector<std::int64_t> ticks;
            for (std::int64_t tk = clk->phase; tk <= trace.end_tick; tk += clk->period) ticks.push_back(tk);
            Samples s(nets.size());
            for (std::size_t q = 0; q < nets.size(); ++q)
                for (std::int64_t tk : ticks) s[q].push_back(trace.value_at(nets[q], tk - 1) & mask(widths[q]));

            Evaluator ev{s, widths};
            PropertyVerdict v;
            std::int64_t n = static_cast<std::int64_t>(ticks.size());
            for (std::int64_t k = 0; k < n && v.pass; ++k) {
                // Attempt started at k, decided at k (|->) or k + 1 (|=>).
                std::int64_t at = prop.next ? k + 1 : k;
                if (at >= n) break;
                if (prop.disable && (ev.eval(*prop.disable, at).v || ev.eval(*prop.disable, k).v)) continue;
                if (prop.ante && !ev.eval(*prop.ante, k).v) continue;
                if (!ev.eval(*prop.cons, at).v) {
                    v.pass = false;
                    v.tick = ticks[at];
                }
            }
            out[prop.name] = v;
        }
    }
    return out;
}

} // namespace cdcv
