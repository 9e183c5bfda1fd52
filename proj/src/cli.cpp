#include "cdcv/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cdcv/codegen.hpp"
#include "cdcv/corpus.hpp"
#include "cdcv/error.hpp"
#include "cdcv/pipeline.hpp"
#include "cdcv/sim.hpp"

namespace cdcv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string dump(const json& j) { return j.dump(2) + "\n"; }

struct DesignArgs {
    std::vector<std::string> rtl;
    std::string constraints;
    std::string top;
    bool allow_black_boxes = false;
};

void add_design_options(CLI::App* sc, DesignArgs& d) {
    sc->add_option("rtl", d.rtl, "Verilog source files")->required();
    sc->add_option("-c,--constraints", d.constraints, "Constraints file")->required();
    sc->add_option("--top", d.top, "Top module (inferred when omitted)");
    sc->add_flag("--allow-black-boxes", d.allow_black_boxes, "Treat undefined modules as black boxes");
}

/// Records inputs and outputs of one command for the run manifest.
class Session {
public:
    Session(std::string command, const std::vector<std::string>& argv) : command_(std::move(command)), argv_(argv) {}

    std::string read(const std::string& path) {
        std::string text = read_file(path);
        inputs_[path] = fnv1a_hex(text);
        return text;
    }

    void write(const fs::path& p, const std::string& text) {
        write_file_atomic(p, text);
        outputs_.insert(p.generic_string());
    }

    Analysis load(const DesignArgs& d) {
        DesignInput in;
        for (const auto& f : d.rtl) in.rtl.emplace_back(f, read(f));
        in.constraints = read(d.constraints);
        in.constraints_origin = d.constraints;
        std::optional<ConstraintSet> base;
        if (const char* env = std::getenv("CDCV_OPTIONS"); env && *env) {
            options_file_ = env;
            base = parse_constraints(read(env), env);
            in.base = &*base;
        }
        in.top = d.top;
        in.allow_black_boxes = d.allow_black_boxes;
        Analysis a = load_design(in);
        fingerprint_ = netlist_fingerprint(a.netlist);
        return a;
    }

    json& options() { return options_; }
    void seeds(std::vector<std::uint64_t> s) { seeds_ = std::move(s); }

    /// Written last so it lists every other output.
    void finish(const fs::path& manifest, int exit_code) {
        json j = {{"format", "cdcv-manifest-1"},
                  {"tool_version", CDCV_VERSION},
                  {"command", command_},
                  {"argv", argv_},
                  {"inputs", inputs_},
                  {"options_file", options_file_.empty() ? json(nullptr) : json(options_file_)},
                  {"options", options_},
                  {"seeds", seeds_},
                  {"netlist_fingerprint", fingerprint_.empty() ? json(nullptr) : json(fingerprint_)},
                  {"outputs", outputs_},
                  {"exit_code", exit_code}};
        write_file_atomic(manifest, dump(j));
    }

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::map<std::string, std::string> inputs_;
    std::set<std::string> outputs_;
    std::string options_file_;
    std::string fingerprint_;
    json options_ = json::object();
    std::vector<std::uint64_t> seeds_;
};

/// "7" or "1..20".
std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    auto num = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw Error("BadSeeds", "expected N or A..B, got '" + text + "'");
        return std::stoull(s);
    };
    auto dots = text.find("..");
    if (dots == std::string::npos) return {num(text)};
    std::uint64_t lo = num(text.substr(0, dots)), hi = num(text.substr(dots + 2));
    if (hi < lo || hi - lo >= 100000) throw Error("BadSeeds", "bad seed range '" + text + "'");
    std::vector<std::uint64_t> v;
    for (std::uint64_t s = lo; s <= hi; ++s) v.push_back(s);
    return v;
}

std::vector<CheckerSpec> checkers_for(const Analysis& a, const std::vector<std::string>& extra) {
    auto cs = default_checkers(a);
    for (const auto& e : extra) {
        auto c = parse_checker(e);
        if (std::find(cs.begin(), cs.end(), c) == cs.end()) cs.push_back(c);
    }
    return cs;
}

Stimulus load_stimulus(Session& s, const std::string& path, const Analysis& a) {
    Stimulus st = parse_stimulus(s.read(path), path);
    check_stimulus(st, a.netlist, a.constraints);
    return st;
}

// ---- analyze ---------------------------------------------------------------

struct AnalyzeArgs {
    DesignArgs d;
    std::string out = "cdcv_out";
    bool strict = false;
};

int cmd_analyze(const AnalyzeArgs& o, Session& s, std::ostream& out) {
    Analysis a = s.load(o.d);
    auto findings = run_rules(a);
    s.options() = {{"strict", o.strict}, {"allow_black_boxes", o.d.allow_black_boxes}, {"top", o.d.top}};
    fs::path dir = o.out;
    s.write(dir / "findings.json", dump(findings_to_json(findings)));
    s.write(dir / "pairs.json", dump(pairs_to_json(a.netlist, a.pairs, a.rdc, a.unclocked)));
    s.write(dir / "syncs.json", dump(syncs_to_json(a.netlist, a.syncs)));
    unsigned errors = 0;
    for (const auto& f : findings) {
        out << to_string(f.severity) << " " << f.rule << " " << f.subject << ": " << f.message << "\n";
        errors += f.severity == Severity::Error;
    }
    out << a.pairs.size() << " cdc pairs, " << a.rdc.size() << " rdc pairs, " << a.syncs.syncs.size()
        << " synchronizers, " << findings.size() << " findings (" << errors << " errors)\n";
    int code = o.strict && errors ? kExitFindings : kExitOk;
    s.finish(dir / "manifest.json", code);
    return code;
}

// ---- simulate --------------------------------------------------------------

struct SimulateArgs {
    DesignArgs d;
    std::string stimulus;
    std::string out = "cdcv_out";
    bool no_msi = false;
    double probability = 0.5;
    std::vector<std::string> pair_probability; // pair=p
    std::string seeds = "1";
    std::vector<std::string> checks;
    bool waves = false;
    bool vcd = false;
    unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& o, Session& s, std::ostream& out) {
    Analysis a = s.load(o.d);
    Stimulus st = load_stimulus(s, o.stimulus, a);
    MsiConfig msi;
    msi.enabled = !o.no_msi;
    msi.probability = o.probability;
    for (const auto& pp : o.pair_probability) {
        auto eq = pp.rfind('=');
        if (eq == std::string::npos) throw Error("BadMsiConfig", "expected pair=p, got '" + pp + "'");
        try {
            msi.pair_probability[pp.substr(0, eq)] = std::stod(pp.substr(eq + 1));
        } catch (const std::logic_error&) {
            throw Error("BadMsiConfig", "bad probability in '" + pp + "'");
        }
    }
    msi.validate();
    auto seeds = msi.enabled ? parse_seeds(o.seeds) : std::vector<std::uint64_t>{1};
    auto checkers = checkers_for(a, o.checks);
    s.seeds(seeds);
    json checks = json::array();
    for (const auto& c : checkers) checks.push_back(c.name());
    s.options() = {{"msi", msi.enabled}, {"probability", msi.probability}, {"pair_probability", msi.pair_probability},
                   {"checkers", checks}, {"waves", o.waves}, {"vcd", o.vcd}};

    auto results = simulate_seeds(a, st, msi, checkers, seeds, o.threads);
    fs::path dir = o.out;
    CoverageDb cov = CoverageDb::for_pairs(a.pairs, a.netlist.name);
    json runs = json::array();
    std::set<std::string> failing_all;
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        std::string stem = "seed_" + std::to_string(seeds[i]);
        json tj = trace_to_json(a.netlist, r.trace, o.waves);
        tj["seed"] = seeds[i];
        s.write(dir / "traces" / (stem + ".json"), dump(tj));
        if (o.vcd) {
            std::ostringstream vcd;
            write_vcd(vcd, a.netlist, r.trace);
            s.write(dir / "vcd" / (stem + ".vcd"), vcd.str());
        }
        if (msi.enabled) cov = merge(cov, r.coverage);
        runs.push_back({{"seed", seeds[i]}, {"verdicts", tj["verdicts"]}});
        for (const auto& v : r.trace.verdicts) {
            if (v.pass) continue;
            failing_all.insert(v.checker);
            out << "FAIL " << v.checker << " seed " << seeds[i] << " tick " << v.tick << ": " << v.message << "\n";
        }
    }
    if (!msi.enabled) cov.edges = results.front().coverage.edges;
    s.write(dir / "coverage.json", dump(cov.to_json()));
    s.write(dir / "verdicts.json",
            dump({{"format", "cdcv-verdicts-1"}, {"msi", msi.enabled}, {"runs", runs}, {"failing", failing_all}}));
    out << results.size() << " run(s), " << checkers.size() << " checker(s), " << failing_all.size()
        << " failing, " << cov.total() << " msi event(s) covered\n";
    int code = failing_all.empty() ? kExitOk : kExitFailure;
    s.finish(dir / "manifest.json", code);
    return code;
}

// ---- explore ---------------------------------------------------------------

struct ExploreArgs {
    DesignArgs d;
    std::string stimulus;
    std::string out = "cdcv_out";
    unsigned budget = 16;
    std::vector<std::string> checks;
};

int cmd_explore(const ExploreArgs& o, Session& s, std::ostream& out) {
    Analysis a = s.load(o.d);
    Stimulus st = load_stimulus(s, o.stimulus, a);
    MsiConfig msi;
    msi.mode = MsiConfig::Mode::Exhaustive;
    msi.max_decisions = o.budget;
    msi.validate();
    auto checkers = checkers_for(a, o.checks);
    json checks = json::array();
    for (const auto& c : checkers) checks.push_back(c.name());
    s.options() = {{"budget", o.budget}, {"checkers", checks}};

    auto res = explore_exhaustive(a, st, msi, checkers);
    fs::path dir = o.out;
    json verdicts = json::object();
    bool any_cex = false;
    for (const auto& [name, v] : res.verdicts) {
        json j = {{"proven", v.proven}};
        if (v.counterexample) {
            any_cex = true;
            const auto& t = v.counterexample->trace;
            std::string vcd_path = "cex/" + sv_ident(name) + ".vcd";
            std::ostringstream vcd;
            write_vcd(vcd, a.netlist, t);
            s.write(dir / vcd_path, vcd.str());
            json tj = trace_to_json(a.netlist, t, false);
            const Verdict* fv = t.verdict(name);
            j["counterexample"] = {{"msi", tj["msi"]},
                                   {"tick", fv ? fv->tick : -1},
                                   {"message", fv ? fv->message : ""},
                                   {"vcd", vcd_path}};
            out << "COUNTEREXAMPLE " << name << " tick " << (fv ? fv->tick : -1) << " (" << vcd_path << ")\n";
        } else {
            out << "PROVEN " << name << "\n";
        }
        verdicts[name] = std::move(j);
    }
    s.write(dir / "explore.json", dump({{"format", "cdcv-explore-1"},
                                        {"branches", res.branches},
                                        {"max_decisions_seen", res.max_decisions_seen},
                                        {"verdicts", verdicts}}));
    out << res.branches << " branch(es), at most " << res.max_decisions_seen << " decision(s)\n";
    int code = any_cex ? kExitFailure : kExitOk;
    s.finish(dir / "manifest.json", code);
    return code;
}

// ---- generate --------------------------------------------------------------

struct GenerateArgs {
    DesignArgs d;
    std::string out = "cdcv_out";
};

int cmd_generate(const GenerateArgs& o, Session& s, std::ostream& out, std::ostream& err) {
    Analysis a = s.load(o.d);
    auto files = generate_all(a);
    fs::path dir = o.out;
    for (const auto& f : files) {
        s.write(dir / f.path, f.text);
        out << f.path << "\n";
    }
    auto issues = lint_generated(files, a.netlist);
    for (const auto& i : issues) err << i.file << ":" << i.line << ": lint: " << i.message << "\n";
    out << files.size() << " file(s) generated\n";
    int code = issues.empty() ? kExitOk : kExitFailure;
    s.finish(dir / "manifest.json", code);
    return code;
}

// ---- report / merge-coverage ------------------------------------------------

struct ReportArgs {
    DesignArgs d;
    std::string coverage;
    std::string out = "cdcv_out";
};

int cmd_report(const ReportArgs& o, Session& s, std::ostream& out) {
    Analysis a = s.load(o.d);
    CoverageDb db = CoverageDb::from_json(json::parse(s.read(o.coverage)));
    CoverageReport rep = coverage_report(db, a.pairs);
    fs::path dir = o.out;
    s.write(dir / "coverage_report.json", dump(rep.to_json()));
    out << rep.to_text();
    s.finish(dir / "manifest.json", kExitOk);
    return kExitOk;
}

struct MergeArgs {
    std::vector<std::string> dbs;
    std::string out = "cdcv_out";
    std::string scope;
};

int cmd_merge(const MergeArgs& o, Session& s, std::ostream& out) {
    std::optional<CoverageDb> acc;
    for (const auto& f : o.dbs) {
        CoverageDb db = CoverageDb::from_json(json::parse(s.read(f)));
        acc = acc ? merge(*acc, db) : db;
    }
    if (!o.scope.empty()) acc->scope = o.scope;
    s.options() = {{"scope", o.scope}};
    fs::path dir = o.out;
    s.write(dir / "coverage.json", dump(acc->to_json()));
    out << "merged " << o.dbs.size() << " database(s): " << acc->seeds.size() << " seed(s), " << acc->total()
        << " hit(s)\n";
    s.finish(dir / "manifest.json", kExitOk);
    return kExitOk;
}

// ---- corpus ----------------------------------------------------------------

struct CorpusArgs {
    std::string root = "corpus";
    std::string filter;
    std::string out = "cdcv_out";
    unsigned threads = 0;
};

int cmd_corpus(const CorpusArgs& o, Session& s, std::ostream& out) {
    CorpusReport rep = run_corpus(o.root, o.filter, o.threads);
    s.options() = {{"root", o.root}, {"filter", o.filter}};
    fs::path dir = o.out;
    s.write(dir / "corpus.json", dump(rep.to_json()));
    std::size_t failed = 0;
    for (const auto& c : rep.checks) {
        out << (c.pass ? "PASS " : "FAIL ") << c.case_name << " " << c.expectation;
        if (!c.pass) {
            out << ": " << c.detail;
            ++failed;
        }
        out << "\n";
    }
    out << rep.checks.size() - failed << "/" << rep.checks.size() << " expectations met\n";
    int code = rep.ok() ? kExitOk : kExitFailure;
    s.finish(dir / "manifest.json", code);
    return code;
}

// ---- replay ----------------------------------------------------------------

int cmd_replay(const std::string& manifest_path, std::ostream& out, std::ostream& err) {
    json m = json::parse(read_file(manifest_path));
    if (m.value("format", "") != "cdcv-manifest-1") throw Error("BadManifest", manifest_path + " is not a run manifest");
    auto argv = m.at("argv").get<std::vector<std::string>>();
    auto outputs = m.at("outputs").get<std::vector<std::string>>();
    std::map<std::string, std::optional<std::string>> before;
    for (const auto& p : outputs) {
        try {
            before[p] = read_file(p);
        } catch (const Error&) {
            before[p] = std::nullopt;
        }
    }
    std::ostringstream sink;
    int code = run_cli(argv, sink, err);
    int expected = m.at("exit_code").get<int>();
    unsigned diffs = 0;
    auto after = json::parse(read_file(manifest_path));
    if (after.at("netlist_fingerprint") != m.at("netlist_fingerprint")) {
        err << "replay: netlist fingerprint changed: " << m.at("netlist_fingerprint") << " vs "
            << after.at("netlist_fingerprint") << "\n";
        ++diffs;
    }
    for (const auto& [p, old] : before) {
        std::optional<std::string> now;
        try {
            now = read_file(p);
        } catch (const Error&) {
        }
        if (!old || now != old) {
            err << "replay: " << p << " differs\n";
            ++diffs;
        }
    }
    if (code != expected) {
        err << "replay: exit code " << code << ", recorded " << expected << "\n";
        ++diffs;
    }
    if (diffs) return kExitMismatch;
    out << "replay of " << m.at("command").get<std::string>() << " reproduced " << outputs.size() << " output(s)\n";
    return code;
}

int exit_code_for(const Error& e) {
    if (e.code() == "DecisionBudgetExceeded") return kExitBudget;
    if (e.code() == "FingerprintMismatch") return kExitMismatch;
    return kExitInput;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Clock domain crossing verification toolkit", "cdcv"};
    app.set_version_flag("--version", CDCV_VERSION);
    app.require_subcommand(1);

    AnalyzeArgs an;
    auto* sc_an = app.add_subcommand("analyze", "Structural CDC/RDC analysis");
    add_design_options(sc_an, an.d);
    sc_an->add_option("-o,--out", an.out, "Output directory");
    sc_an->add_flag("--strict", an.strict, "Exit 2 when an Error finding is reported");

    SimulateArgs si;
    auto* sc_si = app.add_subcommand("simulate", "Simulate with metastability injection and run checkers");
    add_design_options(sc_si, si.d);
    sc_si->add_option("-s,--stimulus", si.stimulus, "Stimulus file")->required();
    sc_si->add_option("-o,--out", si.out, "Output directory");
    sc_si->add_flag("--no-msi", si.no_msi, "Disable injection");
    sc_si->add_option("-p,--probability", si.probability, "Injection probability");
    sc_si->add_option("--pair-probability", si.pair_probability, "Per-pair override, pair=p");
    sc_si->add_option("--seeds,--seed", si.seeds, "Seed N or range A..B");
    sc_si->add_option("--check", si.checks, "Extra checker, kind:subject");
    sc_si->add_flag("--waves", si.waves, "Include waveforms in trace JSON");
    sc_si->add_flag("--vcd", si.vcd, "Write a VCD per seed");
    sc_si->add_option("-j,--jobs", si.threads, "Parallel simulations (0 = hardware)");

    ExploreArgs ex;
    auto* sc_ex = app.add_subcommand("explore", "Enumerate every injection decision");
    add_design_options(sc_ex, ex.d);
    sc_ex->add_option("-s,--stimulus", ex.stimulus, "Stimulus file")->required();
    sc_ex->add_option("-o,--out", ex.out, "Output directory");
    sc_ex->add_option("--budget", ex.budget, "Maximum decisions per branch");
    sc_ex->add_option("--check", ex.checks, "Extra checker, kind:subject");

    GenerateArgs ge;
    auto* sc_ge = app.add_subcommand("generate", "Emit assertion checkers, coverage model and bind file");
    add_design_options(sc_ge, ge.d);
    sc_ge->add_option("-o,--out", ge.out, "Output directory");

    ReportArgs re;
    auto* sc_re = app.add_subcommand("report", "Coverage report for a design");
    add_design_options(sc_re, re.d);
    sc_re->add_option("--coverage", re.coverage, "Coverage database")->required();
    sc_re->add_option("-o,--out", re.out, "Output directory");

    MergeArgs me;
    auto* sc_me = app.add_subcommand("merge-coverage", "Sum coverage databases");
    sc_me->add_option("dbs", me.dbs, "Coverage databases")->required();
    sc_me->add_option("-o,--out", me.out, "Output directory");
    sc_me->add_option("--scope", me.scope, "Scope of the merged database");

    CorpusArgs co;
    auto* sc_co = app.add_subcommand("corpus", "Check every labeled corpus expectation");
    sc_co->add_option("--root", co.root, "Corpus directory");
    sc_co->add_option("--filter", co.filter, "Only cases whose name contains this");
    sc_co->add_option("-o,--out", co.out, "Output directory");
    sc_co->add_option("-j,--jobs", co.threads, "Parallel cases (0 = hardware)");

    std::string manifest;
    auto* sc_rp = app.add_subcommand("replay", "Re-run a recorded command and compare outputs");
    sc_rp->add_option("manifest", manifest, "manifest.json of an earlier run")->required();

    std::vector<std::string> storage{"cdcv"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitInput;
    }

    try {
        if (*sc_rp) return cmd_replay(manifest, out, err);
        Session s(app.get_subcommands().front()->get_name(), args);
        if (*sc_an) return cmd_analyze(an, s, out);
        if (*sc_si) return cmd_simulate(si, s, out);
        if (*sc_ex) return cmd_explore(ex, s, out);
        if (*sc_ge) return cmd_generate(ge, s, out, err);
        if (*sc_re) return cmd_report(re, s, out);
        if (*sc_me) return cmd_merge(me, s, out);
        if (*sc_co) return cmd_corpus(co, s, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const json::exception& e) {
        err << "error: BadJson: " << e.what() << "\n";
        return kExitInput;
    } catch (const fs::filesystem_error& e) {
        err << "error: FileError: " << e.what() << "\n";
        return kExitInput;
    }
    return kExitInput;
}

} // namespace cdcv
