#include "cdcv/corpus.hpp"

#include <algorithm>
#include <future>
#include <sstream>
#include <thread>

#include "cdcv/codegen.hpp"
#include "cdcv/error.hpp"
#include "cdcv/pipeline.hpp"

namespace cdcv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::set<std::string> str_set(const json& j, const std::string& key, const std::string& origin) {
    if (!j.is_array()) throw Error("MissingLabel", origin + ": '" + key + "' must be a list");
    std::set<std::string> out;
    for (const auto& x : j) {
        if (!x.is_string()) throw Error("MissingLabel", origin + ": '" + key + "' must list strings");
        out.insert(x.get<std::string>());
    }
    return out;
}

const json& need(const json& j, const std::string& key, const std::string& origin) {
    if (!j.contains(key)) throw Error("MissingLabel", origin + ": missing '" + key + "'");
    return j.at(key);
}

std::pair<std::uint64_t, std::uint64_t> seed_range(const json& j, const std::string& origin) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_unsigned() || !j[1].is_number_unsigned() || j[0] > j[1])
        throw Error("MissingLabel", origin + ": seeds must be [first, last]");
    return {j[0].get<std::uint64_t>(), j[1].get<std::uint64_t>()};
}

std::string join(const std::set<std::string>& s) {
    std::string out = "{";
    for (const auto& x : s) out += (out.size() > 1 ? ", " : "") + x;
    return out + "}";
}

std::string diff(const std::set<std::string>& want, const std::set<std::string>& got) {
    if (want == got) return "";
    return "expected " + join(want) + ", got " + join(got);
}

} // namespace

CaseLabels parse_labels(const json& j, const std::string& origin) {
    if (!j.is_object()) throw Error("MissingLabel", origin + ": labels must be an object");
    CaseLabels l;
    try {
        l.kind = need(j, "kind", origin).get<std::string>();
        if (l.kind != "bug" && l.kind != "clean" && l.kind != "scheme")
            throw Error("MissingLabel", origin + ": kind must be bug, clean or scheme");
        if (l.kind != "scheme") l.twin = need(j, "twin", origin).get<std::string>();
        if (l.kind == "bug") l.bug = need(j, "bug", origin).get<std::string>();
        l.allow_black_boxes = j.value("allow_black_boxes", false);
        l.findings = str_set(need(j, "findings", origin), "findings", origin);
        for (const auto& [k, v] : need(j, "syncs", origin).items()) l.syncs[k] = v.get<std::string>();
        if (j.contains("checks")) {
            auto c = str_set(j.at("checks"), "checks", origin);
            l.checks.assign(c.begin(), c.end());
        }
        l.reference_fail = str_set(need(j, "reference_fail", origin), "reference_fail", origin);
        const json& m = need(j, "msi", origin);
        std::tie(l.msi.first_seed, l.msi.last_seed) = seed_range(need(m, "seeds", origin), origin);
        l.msi.probability = m.value("p", 0.5);
        l.msi.fail = str_set(need(m, "fail", origin), "msi.fail", origin);
        const json& e = need(j, "explore", origin);
        if (!e.is_null()) {
            CaseLabels::Explore ex;
            ex.max_decisions = e.value("max_decisions", 16u);
            ex.budget_exceeded = e.value("budget_exceeded", false);
            if (!ex.budget_exceeded) ex.fail = str_set(need(e, "fail", origin), "explore.fail", origin);
            l.explore = ex;
        }
        if (j.contains("coverage")) {
            const json& c = j.at("coverage");
            CaseLabels::Coverage cv;
            std::tie(cv.first_seed, cv.last_seed) = seed_range(need(c, "seeds", origin), origin);
            cv.min_bins = need(c, "min_bins", origin).get<unsigned>();
            l.coverage = cv;
        }
    } catch (const json::exception& ex) {
        throw Error("MissingLabel", origin + ": " + ex.what());
    }
    if (l.kind == "clean" && (!l.findings.empty() || !l.reference_fail.empty() || !l.msi.fail.empty()))
        throw Error("MissingLabel", origin + ": a clean twin must expect no findings and no failures");
    return l;
}

std::set<std::string> failing(const SimTrace& t) {
    std::set<std::string> out;
    for (const auto& v : t.verdicts)
        if (!v.pass) out.insert(v.checker);
    return out;
}

std::vector<std::string> list_cases(const fs::path& root, const std::string& filter) {
    std::vector<std::string> out;
    std::error_code ec;
    for (const auto& e : fs::directory_iterator(root, ec))
        if (e.is_directory() && e.path().filename().string().find(filter) != std::string::npos)
            out.push_back(e.path().filename().string());
    std::sort(out.begin(), out.end());
    return out;
}

LoadedCase load_case(const fs::path& root, const std::string& name) {
    fs::path dir = root / name;
    LoadedCase c;
    json j = json::parse(read_file(dir / "labels.json"));
    c.labels = parse_labels(j, (dir / "labels.json").string());
    DesignInput in;
    in.rtl.emplace_back((dir / "rtl.v").string(), read_file(dir / "rtl.v"));
    in.constraints = read_file(dir / "constraints.cdc");
    in.constraints_origin = (dir / "constraints.cdc").string();
    in.allow_black_boxes = c.labels.allow_black_boxes;
    c.analysis = load_design(in);
    c.stimulus = parse_stimulus(read_file(dir / "stimulus.stim"), (dir / "stimulus.stim").string());
    check_stimulus(c.stimulus, c.analysis.netlist, c.analysis.constraints);
    return c;
}

std::vector<CorpusCheck> run_case(const fs::path& root, const std::string& name) {
    std::vector<CorpusCheck> out;
    auto check = [&](const std::string& exp, bool pass, const std::string& detail = "") {
        out.push_back({name, exp, pass, detail});
    };
    CaseLabels l;
    Analysis a;
    Stimulus st;
    try {
        LoadedCase c = load_case(root, name);
        l = std::move(c.labels);
        a = std::move(c.analysis);
        st = std::move(c.stimulus);
    } catch (const std::exception& e) {
        check("load", false, e.what());
        return out;
    }
    check("load", true);

    auto guarded = [&](const std::string& exp, auto&& fn) {
        try {
            std::string d = fn();
            check(exp, d.empty(), d);
        } catch (const std::exception& e) {
            check(exp, false, e.what());
        }
    };

    guarded("findings", [&] {
        std::set<std::string> got;
        for (const auto& f : run_rules(a)) got.insert(f.rule);
        return diff(l.findings, got);
    });
    guarded("syncs", [&] {
        std::set<std::string> want, got;
        for (const auto& [id, k] : l.syncs) want.insert(id + "=" + k);
        for (const auto& s : a.syncs.syncs) got.insert(s.id + "=" + to_string(s.kind));
        return diff(want, got);
    });

    std::vector<CheckerSpec> checkers = default_checkers(a);
    for (const auto& c : l.checks) checkers.push_back(parse_checker(c));

    guarded("reference", [&] { return diff(l.reference_fail, failing(reference_simulate(a, st, checkers))); });

    guarded("msi", [&] {
        MsiConfig m;
        m.probability = l.msi.probability;
        std::vector<std::uint64_t> seeds;
        for (auto s = l.msi.first_seed; s <= l.msi.last_seed; ++s) seeds.push_back(s);
        std::set<std::string> got;
        for (const auto& r : simulate_seeds(a, st, m, checkers, seeds)) got.merge(failing(r.trace));
        return diff(l.msi.fail, got);
    });

    if (l.explore) {
        guarded("explore", [&]() -> std::string {
            MsiConfig m;
            m.max_decisions = l.explore->max_decisions;
            try {
                ExploreResult r = explore_exhaustive(a, st, m, checkers);
                if (l.explore->budget_exceeded) return "expected DecisionBudgetExceeded";
                std::set<std::string> got;
                for (const auto& [n, v] : r.verdicts)
                    if (!v.proven) got.insert(n);
                return diff(l.explore->fail, got);
            } catch (const Error& e) {
                if (e.code() == "DecisionBudgetExceeded" && l.explore->budget_exceeded) return "";
                throw;
            }
        });
    }

    if (l.coverage) {
        guarded("coverage", [&]() -> std::string {
            MsiConfig m;
            std::vector<std::uint64_t> seeds;
            for (auto s = l.coverage->first_seed; s <= l.coverage->last_seed; ++s) seeds.push_back(s);
            CoverageDb db = CoverageDb::for_pairs(a.pairs, name);
            for (const auto& r : simulate_seeds(a, st, m, {}, seeds)) db = merge(db, r.coverage);
            unsigned hit = coverage_report(db, a.pairs).bins_hit;
            if (hit >= l.coverage->min_bins) return "";
            return "hit " + std::to_string(hit) + " bins, expected at least " + std::to_string(l.coverage->min_bins);
        });
    }

    // Whenever unsuppressed pairs exist, the coverage model must carry MSI
    // hooks for each of them.
    guarded("msi_hooks", [&]() -> std::string {
        GeneratedFile cov = generate_coverage_model(a);
        std::size_t want = 0;
        for (const auto& p : a.pairs) {
            if (p.suppressed) continue;
            ++want;
            std::string id = sv_ident(p.id);
            if (cov.text.find(id + "_msi_evt") == std::string::npos ||
                cov.text.find("covergroup cg_" + id + " ") == std::string::npos)
                return "no MSI hook for " + p.id;
        }
        if (cov.sources.size() != want) return "covergroup count differs from unsuppressed pairs";
        return "";
    });

    guarded("codegen", [&]() -> std::string {
        auto files = generate_all(a);
        auto issues = lint_generated(files, a.netlist);
        if (!issues.empty())
            return issues[0].file + ":" + std::to_string(issues[0].line) + ": " + issues[0].message;
        // Generated assertions against the runtime checkers, on the reference
        // trace and on one MSI trace.
        auto defaults = default_checkers(a);
        MsiConfig m;
        for (const SimTrace& tr : {reference_simulate(a, st, defaults), simulate(a, st, m, defaults).trace}) {
            auto sv = interpret_assertions(files, a, tr);
            for (const auto& c : defaults) {
                const Verdict* v = tr.verdict(c.name());
                PropertyVerdict agg;
                for (const auto& pn : property_names(c)) {
                    auto it = sv.find(pn);
                    if (it == sv.end()) return "no assertion " + pn;
                    if (!it->second.pass && (agg.pass || it->second.tick < agg.tick)) agg = it->second;
                }
                if (agg.pass != v->pass || agg.tick != v->tick)
                    return c.name() + ": assertion " + (agg.pass ? "passes" : "fails at " + std::to_string(agg.tick)) +
                           ", runtime " + (v->pass ? "passes" : "fails at " + std::to_string(v->tick));
            }
        }
        return "";
    });
    return out;
}

bool CorpusReport::ok() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
}

json CorpusReport::to_json() const {
    json rows = json::array();
    std::set<std::string> cases;
    std::size_t failed = 0;
    for (const auto& c : checks) {
        json r = {{"case", c.case_name}, {"expectation", c.expectation}, {"pass", c.pass}};
        if (!c.detail.empty()) r["detail"] = c.detail;
        rows.push_back(std::move(r));
        cases.insert(c.case_name);
        failed += !c.pass;
    }
    return {{"format", "cdcv-corpus-1"},
            {"cases", cases.size()},
            {"checks", rows},
            {"passed", checks.size() - failed},
            {"failed", failed}};
}

namespace {

// Every taxonomy row maps to a bug case whose clean twin exists, or to a
// pipeline check run on every case.
std::vector<CorpusCheck> check_taxonomy(const fs::path& root) {
    std::vector<CorpusCheck> out;
    auto add = [&](const std::string& exp, bool pass, const std::string& d = "") {
        out.push_back({"taxonomy", exp, pass, d});
    };
    json t;
    try {
        t = json::parse(read_file(root / "taxonomy.json"));
    } catch (const std::exception& e) {
        add("load", false, e.what());
        return out;
    }
    for (const auto& row : t.value("rows", json::array())) {
        std::string cls = row.value("class", "");
        if (row.contains("check")) {
            add(cls, !row.value("check", "").empty());
            continue;
        }
        std::string cname = row.value("case", "");
        try {
            CaseLabels l = parse_labels(json::parse(read_file(root / cname / "labels.json")), cname);
            if (l.kind != "bug" || l.bug != cls) {
                add(cls, false, cname + " is not labeled as bug " + cls);
                continue;
            }
            CaseLabels tw = parse_labels(json::parse(read_file(root / l.twin / "labels.json")), l.twin);
            add(cls, tw.kind == "clean" && tw.twin == cname, tw.kind == "clean" ? "" : l.twin + " is not clean");
        } catch (const std::exception& e) {
            add(cls, false, e.what());
        }
    }
    if (out.empty()) add("rows", false, "taxonomy has no rows");
    return out;
}

} // namespace

CorpusReport run_corpus(const fs::path& root, const std::string& filter, unsigned threads) {
    std::vector<std::string> names = list_cases(root, filter);
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<std::vector<CorpusCheck>> per(names.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < names.size();) per[i] = run_case(root, names[i]);
    };
    std::vector<std::future<void>> fs;
    for (unsigned t = 0; t < std::min<std::size_t>(threads, names.size()); ++t)
        fs.push_back(std::async(std::launch::async, worker));
    for (auto& f : fs) f.get();

    CorpusReport r;
    for (auto& p : per) r.checks.insert(r.checks.end(), p.begin(), p.end());
    if (filter.empty()) {
        auto t = check_taxonomy(root);
        r.checks.insert(r.checks.end(), t.begin(), t.end());
    }
    return r;
}

} // namespace cdcv
