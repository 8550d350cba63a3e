#include "hlda/cli_runner.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "hlda/arbitrage_regimes.hpp"
#include "hlda/errors.hpp"
#include "hlda/finite_mgf.hpp"
#include "hlda/mc_harness.hpp"
#include "hlda/rate_functions.hpp"

#ifndef HLDA_VERSION
#define HLDA_VERSION "unknown"
#endif

namespace hlda {

using nlohmann::json;

namespace {

constexpr std::pair<Experiment, const char*> kExperimentNames[] = {
    {Experiment::rate_fn, "rate-fn"},
    {Experiment::mgf_check, "mgf-check"},
    {Experiment::classify, "classify"},
    {Experiment::ldp_verify, "ldp-verify"},
    {Experiment::ergodic_check, "ergodic-check"},
    {Experiment::martingale_check, "martingale-check"},
    {Experiment::stopping_time, "stopping-time"},
};

}  // namespace

const char* to_string(Experiment e) {
    for (const auto& [k, name] : kExperimentNames)
        if (k == e) return name;
    return "unknown";
}

std::optional<Experiment> experiment_from_string(const std::string& name) {
    for (const auto& [k, n] : kExperimentNames)
        if (name == n) return k;
    return std::nullopt;
}

const char* version_string() { return HLDA_VERSION; }

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// TOML subset

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

// Cuts a trailing comment, ignoring '#' inside strings.
std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '\\' && in_str) {
            ++i;
            continue;
        }
        if (line[i] == '"') in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

std::optional<json> parse_number(const std::string& tok) {
    if (tok.empty()) return std::nullopt;
    const char* b = tok.data();
    const char* e = b + tok.size();
    const bool integral = tok.find_first_of(".eEin") == std::string::npos;
    if (integral) {
        const char* start = *b == '+' ? b + 1 : b;
        if (*start == '-') {
            std::int64_t v;
            auto [ptr, ec] = std::from_chars(start, e, v);
            if (ec == std::errc() && ptr == e) return json(v);
        } else {
            std::uint64_t v;
            auto [ptr, ec] = std::from_chars(start, e, v);
            if (ec == std::errc() && ptr == e) return json(v);
        }
        return std::nullopt;
    }
    if (tok == "inf" || tok == "+inf") return json(kInfinity);
    if (tok == "-inf") return json(-kInfinity);
    double v;
    const char* start = *b == '+' ? b + 1 : b;
    auto [ptr, ec] = std::from_chars(start, e, v);
    if (ec == std::errc() && ptr == e && std::isfinite(v)) return json(v);
    return std::nullopt;
}

std::optional<json> parse_string(const std::string& tok) {
    if (tok.size() < 2 || tok.front() != '"' || tok.back() != '"') return std::nullopt;
    std::string out;
    for (std::size_t i = 1; i + 1 < tok.size(); ++i) {
        char c = tok[i];
        if (c == '"') return std::nullopt;
        if (c == '\\') {
            if (i + 2 >= tok.size()) return std::nullopt;
            switch (tok[++i]) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: return std::nullopt;
            }
        }
        out += c;
    }
    return json(out);
}

std::optional<json> parse_value(const std::string& tok) {
    if (tok == "true") return json(true);
    if (tok == "false") return json(false);
    if (!tok.empty() && tok.front() == '"') return parse_string(tok);
    if (!tok.empty() && tok.front() == '[') {
        if (tok.back() != ']') return std::nullopt;
        json arr = json::array();
        const std::string inner = trim(tok.substr(1, tok.size() - 2));
        if (inner.empty()) return arr;
        std::stringstream ss(inner);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) {
                // A single trailing comma is allowed.
                if (ss.eof()) break;
                return std::nullopt;
            }
            auto v = parse_number(item);
            if (!v) return std::nullopt;
            arr.push_back(*v);
        }
        return arr;
    }
    return parse_number(tok);
}

}  // namespace

json parse_toml_subset(const std::string& text) {
    json root = json::object();
    std::vector<std::string> problems;
    std::string section;
    std::set<std::string> seen_sections;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const std::string where = "line " + std::to_string(lineno) + ": ";
        const std::string line = trim(strip_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                problems.push_back(where + "malformed section header");
                continue;
            }
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (!valid_name(name)) {
                problems.push_back(where + "invalid section name '" + name + "'");
                continue;
            }
            if (!seen_sections.insert(name).second) problems.push_back(where + "duplicate section [" + name + "]");
            section = name;
            if (!root.contains(section)) root[section] = json::object();
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            problems.push_back(where + "expected key = value");
            continue;
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string tok = trim(line.substr(eq + 1));
        if (!valid_name(key)) {
            problems.push_back(where + "invalid key '" + key + "'");
            continue;
        }
        auto value = parse_value(tok);
        if (!value) {
            problems.push_back(where + "cannot parse value for '" + key + "': " + tok);
            continue;
        }
        json& target = section.empty() ? root : root[section];
        if (target.contains(key)) {
            problems.push_back(where + "duplicate key '" + key + "'");
            continue;
        }
        target[key] = *value;
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return root;
}

// ---------------------------------------------------------------------------
// Schema

namespace {

enum class Kind { number, count, numbers, text };

struct KeySpec {
    const char* name;
    Kind kind;
    std::optional<json> fallback;  // required when absent and not optional
    bool optional = false;
};

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::number: return "a number";
        case Kind::count: return "a non-negative integer";
        case Kind::numbers: return "an array of numbers";
        case Kind::text: return "a string";
    }
    return "?";
}

using Schema = std::vector<KeySpec>;

const Schema& top_schema() {
    static const Schema s = {
        {"seed", Kind::count, json(42u)},
        {"threads", Kind::count, json(0u)},
        {"output_dir", Kind::text, json("out")},
    };
    return s;
}

const Schema& params_schema() {
    static const Schema s = {
        {"mu", Kind::number, json(0.0)},   {"r", Kind::number, json(0.0)},     {"a", Kind::number, {}},
        {"b", Kind::number, {}},           {"sigma", Kind::number, {}},        {"rho", Kind::number, json(0.0)},
        {"v0", Kind::number, json(1.0)},   {"s0", Kind::number, json(1.0)},    {"lambda", Kind::number, json(0.0)},
    };
    return s;
}

const Schema& experiment_schema(Experiment e) {
    static const std::map<Experiment, Schema> all = {
        {Experiment::rate_fn,
         {{"beta", Kind::number, {}}, {"delta", Kind::number, json(0.0)}, {"x_grid", Kind::numbers, {}}}},
        {Experiment::mgf_check,
         {{"alpha", Kind::number, json(0.0)},
          {"beta", Kind::number, json(0.0)},
          {"delta", Kind::number, json(0.0)},
          {"u", Kind::number, {}},
          {"t_grid", Kind::numbers, {}},
          {"psi", Kind::text, json("corrected")}}},
        {Experiment::classify, {{"c", Kind::number, {}}, {"gamma", Kind::number, {}}}},
        {Experiment::ldp_verify,
         {{"alpha", Kind::number, json(0.0)},
          {"beta", Kind::number, {}},
          {"delta", Kind::number, json(0.0)},
          {"x", Kind::number, {}},
          {"t_grid", Kind::numbers, {}},
          {"n_paths", Kind::count, json(100000u)},
          {"steps_per_unit", Kind::count, json(10u)}}},
        {Experiment::ergodic_check,
         {{"t", Kind::number, {}}, {"n_paths", Kind::count, json(1000u)}, {"steps_per_unit", Kind::count, json(100u)}}},
        {Experiment::martingale_check,
         {{"t", Kind::number, {}}, {"n_paths", Kind::count, json(100000u)}, {"steps_per_unit", Kind::count, json(50u)}}},
        {Experiment::stopping_time,
         {{"gamma", Kind::number, {}},
          {"gamma_bar", Kind::number, {}},
          {"gamma_prime", Kind::number, {}, true},
          {"t_grid", Kind::numbers, {}},
          {"f_values", Kind::numbers, {}},
          {"n_paths", Kind::count, json(10000u)},
          {"steps_per_unit", Kind::count, json(10u)}}},
    };
    return all.at(e);
}

bool kind_matches(const json& v, Kind k) {
    switch (k) {
        case Kind::number: return v.is_number();
        case Kind::count: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
        case Kind::numbers:
            if (!v.is_array()) return false;
            for (const auto& x : v)
                if (!x.is_number()) return false;
            return true;
        case Kind::text: return v.is_string();
    }
    return false;
}

// Normalised copy of `in` with defaults filled in; problems are prefixed with
// the section name.
json apply_schema(const json& in, const Schema& schema, const std::string& where, std::vector<std::string>& problems,
                  const std::set<std::string>& ignore = {}) {
    json out = json::object();
    std::set<std::string> known;
    for (const auto& k : schema) {
        known.insert(k.name);
        const std::string full = where + k.name;
        if (!in.contains(k.name)) {
            if (k.fallback) out[k.name] = *k.fallback;
            else if (!k.optional) problems.push_back(full + ": required key missing");
            continue;
        }
        const json& v = in.at(k.name);
        if (!kind_matches(v, k.kind)) {
            problems.push_back(full + ": must be " + kind_name(k.kind));
            continue;
        }
        switch (k.kind) {
            case Kind::number: out[k.name] = v.get<double>(); break;
            case Kind::count: out[k.name] = v.get<std::uint64_t>(); break;
            case Kind::numbers: {
                json arr = json::array();
                for (const auto& x : v) arr.push_back(x.get<double>());
                out[k.name] = arr;
                break;
            }
            case Kind::text: out[k.name] = v; break;
        }
    }
    for (const auto& [key, _] : in.items()) {
        if (known.count(key) || ignore.count(key)) continue;
        problems.push_back(where + key + ": unknown key");
    }
    return out;
}

void check_block(Experiment e, const json& b, const std::string& where, std::vector<std::string>& problems) {
    const auto positive_grid = [&](const char* key) {
        if (!b.contains(key)) return;
        if (b[key].empty()) problems.push_back(where + key + ": must not be empty");
        double prev = 0.0;
        for (const auto& x : b[key]) {
            const double v = x.get<double>();
            if (!(v > prev)) {
                problems.push_back(where + key + ": values must be positive and increasing");
                break;
            }
            prev = v;
        }
    };
    const auto min_paths = [&](std::uint64_t lo) {
        if (b.contains("n_paths") && b["n_paths"].get<std::uint64_t>() < lo)
            problems.push_back(where + "n_paths: must be at least " + std::to_string(lo));
    };
    const auto nonzero = [&](const char* key) {
        if (b.contains(key) && b[key].get<std::uint64_t>() == 0) problems.push_back(where + key + ": must be positive");
    };
    const auto positive = [&](const char* key) {
        if (b.contains(key) && !(b[key].get<double>() > 0.0)) problems.push_back(where + key + ": must be positive");
    };
    switch (e) {
        case Experiment::rate_fn:
            if (b.contains("x_grid") && b["x_grid"].empty()) problems.push_back(where + "x_grid: must not be empty");
            break;
        case Experiment::mgf_check:
            positive_grid("t_grid");
            if (b.contains("psi") && b["psi"] != "corrected" && b["psi"] != "literal")
                problems.push_back(where + "psi: must be \"corrected\" or \"literal\"");
            break;
        case Experiment::classify:
            positive("c");
            positive("gamma");
            break;
        case Experiment::ldp_verify:
            positive_grid("t_grid");
            if (b.contains("t_grid") && b["t_grid"].size() < 4)
                problems.push_back(where + "t_grid: at least 4 values required");
            min_paths(100);
            nonzero("steps_per_unit");
            break;
        case Experiment::ergodic_check:
        case Experiment::martingale_check:
            positive("t");
            min_paths(2);
            nonzero("steps_per_unit");
            break;
        case Experiment::stopping_time:
            positive_grid("t_grid");
            positive("gamma");
            positive("gamma_bar");
            if (b.contains("t_grid") && b.contains("f_values") && b["t_grid"].size() != b["f_values"].size())
                problems.push_back(where + "f_values: must have the same length as t_grid");
            min_paths(100);
            nonzero("steps_per_unit");
            break;
    }
}

ModelParams params_from(const json& j) {
    ModelParams p;
    p.mu = j.at("mu");
    p.r = j.at("r");
    p.a = j.at("a");
    p.b = j.at("b");
    p.sigma = j.at("sigma");
    p.rho = j.at("rho");
    p.v0 = j.at("v0");
    p.s0 = j.at("s0");
    p.lambda = j.at("lambda");
    return p;
}

json params_to(const ModelParams& p) {
    return {{"mu", p.mu}, {"r", p.r},   {"a", p.a},   {"b", p.b},          {"sigma", p.sigma},
            {"rho", p.rho}, {"v0", p.v0}, {"s0", p.s0}, {"lambda", p.lambda}};
}

}  // namespace

ExperimentConfig config_from_json(const json& root) {
    std::vector<std::string> problems;
    if (!root.is_object()) throw ValidationError({"config must be a table"});

    std::set<std::string> sections;
    std::vector<Experiment> found;
    for (const auto& [key, value] : root.items()) {
        if (!value.is_object()) continue;
        sections.insert(key);
        if (key == "params") continue;
        if (auto e = experiment_from_string(key)) found.push_back(*e);
        else problems.push_back("[" + key + "]: unknown section");
    }
    ExperimentConfig cfg;
    const json top = apply_schema(root, top_schema(), "", problems, sections);
    if (top.contains("seed")) cfg.seed = top["seed"].get<std::uint64_t>();
    if (top.contains("threads")) cfg.threads = static_cast<unsigned>(top["threads"].get<std::uint64_t>());
    if (top.contains("output_dir")) cfg.output_dir = top["output_dir"].get<std::string>();

    if (!root.contains("params")) {
        problems.emplace_back("[params]: section missing");
    } else {
        const json pj = apply_schema(root["params"], params_schema(), "params.", problems);
        if (pj.size() == params_schema().size()) {
            cfg.params = params_from(pj);
            try {
                validate_params(cfg.params);
            } catch (const ValidationError& e) {
                for (const auto& msg : e.problems()) problems.push_back("params: " + msg);
            }
        }
    }

    if (found.size() != 1) {
        std::string names;
        for (Experiment e : found) names += std::string(names.empty() ? "" : ", ") + to_string(e);
        problems.push_back("exactly one experiment section required, found " +
                           (found.empty() ? std::string("none") : names));
    } else {
        cfg.experiment = found.front();
        const std::string name = to_string(cfg.experiment);
        cfg.block = apply_schema(root[name], experiment_schema(cfg.experiment), name + ".", problems);
        check_block(cfg.experiment, cfg.block, name + ".", problems);
    }
    if (!problems.empty()) throw ValidationError(std::move(problems));
    return cfg;
}

ExperimentConfig parse_config(const std::string& text) { return config_from_json(parse_toml_subset(text)); }

json config_to_json(const ExperimentConfig& cfg) {
    json j = json::object();
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["output_dir"] = cfg.output_dir;
    j["params"] = params_to(cfg.params);
    j[to_string(cfg.experiment)] = cfg.block;
    return j;
}

// ---------------------------------------------------------------------------
// Running

namespace {

// JSON has no infinities; they are written as strings.
json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

json to_json(const RegimeReport& r) {
    json j;
    j["query"] = to_string(r.query);
    j["verdict"] = to_string(r.verdict);
    j["basis"] = r.basis;
    json th = json::object();
    for (const auto& [k, v] : r.thresholds) th[k] = num(v);
    j["thresholds"] = th;
    json iv = json::array();
    for (const auto& d : r.lambda_intervals) iv.push_back(d.to_string());
    j["lambda_intervals"] = iv;
    if (r.constants) j["constants"] = {{"C", r.constants->c}, {"lambda1", r.constants->lambda1}, {"lambda2", r.constants->lambda2}};
    else j["constants"] = nullptr;
    if (r.interval_verdict) j["interval_verdict"] = to_string(*r.interval_verdict);
    j["notes"] = r.notes;
    return j;
}

json to_json(const RunningStats& s) { return {{"mean", num(s.mean())}, {"stderr", num(s.stderr_mean())}, {"n", s.count()}}; }

json to_json(const ProbEstimate& e) {
    return {{"p_hat", e.p_hat}, {"hits", e.hits}, {"n", e.n}, {"ci_lo", e.ci.lo}, {"ci_hi", e.ci.hi}};
}

json to_json(const LineFit& f) {
    return {{"slope", num(f.slope)},
            {"intercept", num(f.intercept)},
            {"stderr", num(f.stderr_slope)},
            {"r_squared", num(f.r_squared)},
            {"n_points", f.n_points}};
}

std::vector<double> grid(const json& b, const char* key) { return b.at(key).get<std::vector<double>>(); }

class Staging {
public:
    explicit Staging(std::filesystem::path dir) : dir_(std::move(dir)) {}
    Staging(const Staging&) = delete;
    Staging& operator=(const Staging&) = delete;
    ~Staging() {
        std::error_code ec;
        for (const auto& [tmp, dst] : files_) std::filesystem::remove(tmp, ec);
        if (!committed_)
            for (const auto& dst : renamed_) std::filesystem::remove(dst, ec);
    }

    void add(const std::string& name, const std::string& content) {
        std::filesystem::create_directories(dir_);
        const auto dst = dir_ / name;
        auto tmp = dst;
        tmp += ".partial";
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        files_.emplace_back(tmp, dst);
        out << content;
        out.close();
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
    }

    std::vector<std::filesystem::path> commit() {
        for (const auto& [tmp, dst] : files_) {
            std::filesystem::rename(tmp, dst);
            renamed_.push_back(dst);
        }
        files_.clear();
        committed_ = true;
        return renamed_;
    }

private:
    std::filesystem::path dir_;
    std::vector<std::pair<std::filesystem::path, std::filesystem::path>> files_;
    std::vector<std::filesystem::path> renamed_;
    bool committed_ = false;
};

struct Tables {
    json outputs = json::object();
    std::vector<std::pair<std::string, std::string>> files;  // name, content
};

Tables run_rate_fn(const ExperimentConfig& cfg) {
    const auto& b = cfg.block;
    const auto& p = cfg.params;
    const double beta = b["beta"], delta = b["delta"];
    Tables t;
    t.outputs["domain"] = domain_of(beta, delta, p).to_string();
    t.outputs["derivative_image"] = derivative_image(beta, delta, p).to_string();
    const RateMinimum m = rate_minimum(beta, delta, p);
    t.outputs["rate_minimum"] = {{"x_min", num(m.x_min)}, {"value", m.value}, {"attained_zero", m.attained_zero}};
    std::string csv = "x,lambda_star,u_star\n";
    json pts = json::array();
    for (double x : grid(b, "x_grid")) {
        const RateEval r = legendre_transform(x, beta, delta, p);
        csv += format_double(x) + "," + format_double(r.value) + "," + (r.u_star ? format_double(*r.u_star) : "") + "\n";
        pts.push_back({{"x", x}, {"lambda_star", num(r.value)}, {"u_star", r.u_star ? json(*r.u_star) : json(nullptr)}});
    }
    t.outputs["points"] = pts;
    t.files.emplace_back("rates.csv", csv);
    return t;
}

Tables run_mgf_check(const ExperimentConfig& cfg) {
    const auto& b = cfg.block;
    const auto& p = cfg.params;
    const FunctionalCoeffs c{b["alpha"], b["beta"], b["delta"]};
    const double u = b["u"];
    const bool literal = b["psi"] == "literal";
    if (literal && c.delta != 0.0) throw ValidationError({"mgf-check.psi: literal only applies when delta = 0"});
    Tables t;
    const double limit = cgf_limit(u, c.beta, c.delta, p);
    t.outputs["limit"] = limit;
    t.outputs["psi"] = b["psi"];
    std::vector<ConvergencePoint> pts;
    if (literal) {
        for (double tt : grid(b, "t_grid")) {
            const double lm = log_mgf_alpha_beta(u * c.alpha, u * c.beta, tt, p, PsiDenominator::literal);
            pts.push_back({tt, lm, std::abs(lm / tt - limit)});
        }
    } else {
        pts = convergence_gap(u, c, grid(b, "t_grid"), p);
    }
    std::string csv = "t,log_mgf,gap\n";
    json arr = json::array();
    for (const auto& q : pts) {
        csv += format_double(q.t) + "," + format_double(q.log_mgf) + "," + format_double(q.gap) + "\n";
        arr.push_back({{"t", q.t}, {"log_mgf", q.log_mgf}, {"gap", q.gap}});
    }
    t.outputs["points"] = arr;
    t.files.emplace_back("mgf.csv", csv);
    return t;
}

Tables run_classify(const ExperimentConfig& cfg) {
    const auto& p = cfg.params;
    const double c = cfg.block["c"], gamma = cfg.block["gamma"];
    json reg;
    reg["gamma1_average_mpr"] = to_json(classify_gamma1(c, p));
    reg["gamma2_average_mpr"] = to_json(classify_gamma2(c, p));
    const RegimeReport lin = classify_linear_arbitrage(gamma, p);
    json lj = to_json(lin);
    lj["exact_mode"] = {{"verdict", to_string(lin.verdict)}, {"lambda_set", lin.lambda_intervals.front().to_string()}};
    json iv_sets = json::array();
    for (std::size_t i = 1; i < lin.lambda_intervals.size(); ++i) iv_sets.push_back(lin.lambda_intervals[i].to_string());
    lj["interval_mode"] = {{"verdict", to_string(*lin.interval_verdict)}, {"lambda_set", iv_sets}};
    lj["disagreement"] = *lin.interval_verdict != lin.verdict;
    reg["linear_arbitrage"] = lj;
    reg["sublinear_thresholds"] = to_json(sublinear_thresholds(p));
    try {
        reg["sublinear_arbitrage"] = to_json(classify_sublinear_arbitrage(gamma, p));
    } catch (const ValidationError& e) {
        reg["sublinear_arbitrage"] = {{"query", "sublinear_arbitrage"}, {"preconditions_failed", e.problems()}};
    }
    Tables t;
    t.outputs = reg;
    t.files.emplace_back("regimes.json", reg.dump(2) + "\n");
    return t;
}

Tables run_ldp_verify(const ExperimentConfig& cfg) {
    const auto& b = cfg.block;
    const FunctionalCoeffs c{b["alpha"], b["beta"], b["delta"]};
    McOptions opt;
    opt.seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.steps_per_unit = b["steps_per_unit"];
    const std::size_t n_paths = b["n_paths"];
    const LdpReport rep = ldp_check(c, b["x"], grid(b, "t_grid"), n_paths, cfg.params, opt);
    Tables t;
    t.outputs["x"] = rep.x;
    t.outputs["x_min"] = num(rep.x_min);
    t.outputs["direction"] = to_string(rep.direction);
    t.outputs["theory"] = num(rep.theory);
    t.outputs["skipped"] = rep.skipped;
    t.outputs["notes"] = rep.notes;
    std::string csv = "t,n_paths,p_hat,ci_lo,ci_hi,minus_log_p_over_t\n";
    if (rep.empirical) {
        const DecayEstimate& d = *rep.empirical;
        for (const auto& q : d.points)
            csv += format_double(q.t) + "," + std::to_string(q.n) + "," + format_double(q.p_hat) + "," +
                   format_double(q.ci_lo) + "," + format_double(q.ci_hi) + "," + format_double(-q.log_p_hat / q.t) + "\n";
        t.outputs["slope"] = num(d.slope);
        t.outputs["stderr"] = num(d.stderr_slope);
        t.outputs["r_squared"] = num(d.r_squared);
        t.outputs["censored"] = d.censored;
        t.outputs["resolution_floor"] = d.resolution_floor;
        t.outputs["exponential_regime"] = d.exponential_regime();
        t.outputs["resolvable_fit"] = d.resolvable_fit ? to_json(*d.resolvable_fit) : json(nullptr);
        t.outputs["relative_deviation"] = rep.relative_deviation ? json(*rep.relative_deviation) : json(nullptr);
    }
    // Summary row: the theoretical rate in the last column.
    csv += "theory," + std::to_string(n_paths) + ",,,," + format_double(rep.theory) + "\n";
    t.files.emplace_back("ldp.csv", csv);
    return t;
}

Tables run_ergodic(const ExperimentConfig& cfg) {
    const auto& b = cfg.block;
    McOptions opt{cfg.seed, cfg.threads, b["steps_per_unit"]};
    const ErgodicReport r = ergodic_check(b["t"], b["n_paths"], cfg.params, opt);
    Tables t;
    t.outputs["avg_v"] = to_json(r.avg_v);
    t.outputs["avg_inv_v"] = to_json(r.avg_inv_v);
    t.outputs["terminal_v"] = to_json(r.terminal_v);
    t.outputs["terminal_v"]["variance"] = r.terminal_v.variance();
    t.outputs["terminal_v"]["stderr_variance"] = num(r.terminal_v.stderr_variance());
    t.outputs["targets"] = {{"avg_v", r.target_v}, {"avg_inv_v", r.target_inv_v}, {"var_v", r.target_var_v}};
    std::string csv = "quantity,estimate,stderr,target\n";
    csv += "avg_v," + format_double(r.avg_v.mean()) + "," + format_double(r.avg_v.stderr_mean()) + "," +
           format_double(r.target_v) + "\n";
    csv += "avg_inv_v," + format_double(r.avg_inv_v.mean()) + "," + format_double(r.avg_inv_v.stderr_mean()) + "," +
           format_double(r.target_inv_v) + "\n";
    csv += "mean_v_t," + format_double(r.terminal_v.mean()) + "," + format_double(r.terminal_v.stderr_mean()) + "," +
           format_double(r.target_v) + "\n";
    csv += "var_v_t," + format_double(r.terminal_v.variance()) + "," + format_double(r.terminal_v.stderr_variance()) +
           "," + format_double(r.target_var_v) + "\n";
    t.files.emplace_back("ergodic.csv", csv);
    return t;
}

Tables run_martingale(const ExperimentConfig& cfg) {
    const auto& b = cfg.block;
    McOptions opt{cfg.seed, cfg.threads, b["steps_per_unit"]};
    const MartingaleReport r = martingale_check(b["t"], b["n_paths"], cfg.params, opt);
    Tables t;
    t.outputs["z"] = to_json(r.z);
    t.outputs["z_score_vs_one"] = num(r.z_score_vs_one());
    t.outputs["closed_form"] = r.closed_form ? json(*r.closed_form) : json(nullptr);
    t.outputs["closed_form_error"] = r.closed_form_error ? json(*r.closed_form_error) : json(nullptr);
    const auto zc = r.z_score_vs_closed_form();
    t.outputs["z_score_vs_closed_form"] = zc ? num(*zc) : json(nullptr);
    std::string csv = "t,n_paths,mean_z,stderr,closed_form\n";
    csv += format_double(r.t) + "," + std::to_string(r.n_paths) + "," + format_double(r.z.mean()) + "," +
           format_double(r.z.stderr_mean()) + "," + (r.closed_form ? format_double(*r.closed_form) : "") + "\n";
    t.files.emplace_back("martingale.csv", csv);
    return t;
}

Tables run_stopping_time(const ExperimentConfig& cfg) {
    const auto& b = cfg.block;
    McOptions opt{cfg.seed, cfg.threads, b["steps_per_unit"]};
    const auto ts = grid(b, "t_grid");
    const auto fs = grid(b, "f_values");
    std::optional<double> gp;
    if (b.contains("gamma_prime")) gp = b["gamma_prime"].get<double>();
    Tables t;
    json arr = json::array();
    std::string csv = "t,f_of_t,p_hat,ci_lo,ci_hi,p_not_stopped,chebychev_bound,bound\n";
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const StoppingTimeReport r =
            stopping_time_experiment(b["gamma"], b["gamma_bar"], fs[i], ts[i], b["n_paths"], cfg.params, opt, gp);
        csv += format_double(r.t) + "," + format_double(r.f_of_t) + "," + format_double(r.event.p_hat) + "," +
               format_double(r.event.ci.lo) + "," + format_double(r.event.ci.hi) + "," +
               format_double(r.not_stopped.p_hat) + "," + format_double(r.chebychev_bound) + "," +
               format_double(r.bound()) + "\n";
        arr.push_back({{"t", r.t},
                       {"f_of_t", r.f_of_t},
                       {"gamma_prime", r.gamma_prime},
                       {"event", to_json(r.event)},
                       {"not_stopped", to_json(r.not_stopped)},
                       {"chebychev_bound", r.chebychev_bound},
                       {"bound", r.bound()},
                       {"notes", r.notes}});
    }
    t.outputs["points"] = arr;
    t.files.emplace_back("stopping.csv", csv);
    return t;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    Tables tables;
    switch (cfg.experiment) {
        case Experiment::rate_fn: tables = run_rate_fn(cfg); break;
        case Experiment::mgf_check: tables = run_mgf_check(cfg); break;
        case Experiment::classify: tables = run_classify(cfg); break;
        case Experiment::ldp_verify: tables = run_ldp_verify(cfg); break;
        case Experiment::ergodic_check: tables = run_ergodic(cfg); break;
        case Experiment::martingale_check: tables = run_martingale(cfg); break;
        case Experiment::stopping_time: tables = run_stopping_time(cfg); break;
    }
    RunResult res;
    res.report["version"] = version_string();
    res.report["experiment"] = to_string(cfg.experiment);
    res.report["seed"] = cfg.seed;
    res.report["inputs"] = config_to_json(cfg);
    res.report["outputs"] = tables.outputs;
    json names = json::array();
    for (const auto& f : tables.files) names.push_back(f.first);
    res.report["files"] = names;

    Staging stage(cfg.output_dir);
    for (const auto& [name, content] : tables.files) stage.add(name, content);
    stage.add("report.json", res.report.dump(2) + "\n");
    res.files = stage.commit();
    return res;
}

}  // namespace hlda
