// Command-line front end over the library: data generation, the three
// construction pipelines, independent certification, baselines, batch sweeps,
// and CSV report aggregation. Every artifact write is canonical (sorted keys,
// fixed float formatting) so identical configs reproduce identical bytes.
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <minforge/minforge.hpp>

namespace fs = std::filesystem;
using namespace minforge;
using nlohmann::json;

namespace {

// exit-code contract: 0 certified, 2 refuted, 3 inconclusive,
// 4 precondition/assumption failure, 1 internal error
constexpr int rc_certified = 0;
constexpr int rc_internal = 1;
constexpr int rc_refuted = 2;
constexpr int rc_inconclusive = 3;
constexpr int rc_precondition = 4;

int verdict_exit(const std::string& v) {
    if (v == "certified-local-min") return rc_certified;
    if (v == "refuted") return rc_refuted;
    return rc_inconclusive;
}

// Error codes that mean "your inputs cannot satisfy the preconditions",
// as opposed to an internal failure of the pipeline itself.
bool precondition_code(const std::string& code) {
    static const std::vector<std::string> pre = {
        "config-invalid",    "assumption1-failed",  "assumption-unsatisfiable",
        "width-too-small",   "no-valid-anchor",     "distinct-entries",
        "shape-mismatch",    "d-not-less-than-L1",  "dependent-targets",
        "evaluation-at-kink"};
    return std::find(pre.begin(), pre.end(), code) != pre.end();
}

// ---------------------------------------------------------------------------
// shared option bundles
// ---------------------------------------------------------------------------
struct ActArgs {
    std::string kind = "softplus";
    std::optional<double> anchor; // kind default when absent
    double delta = 0.5;
};

ActivationSpec resolve_spec(const ActArgs& a) {
    ActKind kind = act_kind_from_string(a.kind);
    double anchor = a.anchor ? *a.anchor : select_anchor(kind).anchor;
    return spec_for(kind, anchor, a.delta);
}

void add_act_options(CLI::App* app, ActArgs& a) {
    app->add_option("--act", a.kind,
                    "activation kind (sigmoid|tanh|softplus|swish|elu|selu|relu|"
                    "leaky-relu|linear)")
        ->capture_default_str();
    app->add_option("--anchor", a.anchor, "anchor point a (kind default if omitted)");
    app->add_option("--delta", a.delta, "segment half-width around the anchor")
        ->capture_default_str();
}

struct CertArgs {
    long k = 20000;
    double r0 = 1e-2;
    double r_min = 1e-7;
};

void add_cert_options(CLI::App* app, CertArgs& c) {
    app->add_option("--k", c.k, "perturbation samples per radius level")
        ->capture_default_str();
    app->add_option("--r0", c.r0, "initial search radius")->capture_default_str();
    app->add_option("--r-min", c.r_min, "smallest radius level tested (exclusive)")
        ->capture_default_str();
}

// --config FILE: a flat key=value file whose keys mirror the subcommand's
// long flags. It is expanded into argv tokens before CLI11 parses, and a key
// is skipped whenever the matching flag was passed explicitly — that is the
// "CLI flags override the file" rule.
void add_config_file(CLI::App* app) {
    app->add_option("--config",
                    "flat key=value file mirroring the flags; explicit flags win")
        ->type_name("FILE")
        ->expected(0, 1); // consumed before parsing; kept for --help
}

bool has_flag_token(const std::vector<std::string>& args, const std::string& key) {
    std::string full = "--" + key;
    for (const std::string& a : args)
        if (a == full || a.rfind(full + "=", 0) == 0) return true;
    return false;
}

std::vector<std::string> parse_config_file(const std::string& path) {
    std::string text = read_text_file(path);
    std::vector<std::string> tokens;
    std::string line;
    auto flush = [&]() {
        std::size_t b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) { line.clear(); return; }
        std::size_t e = line.find_last_not_of(" \t\r");
        std::string t = line.substr(b, e - b + 1);
        line.clear();
        if (t.empty() || t[0] == '#') return;
        std::size_t eq = t.find('=');
        require(eq != std::string::npos && eq > 0, "config-invalid",
                "config line is not key=value: " + t);
        std::string key = t.substr(0, eq);
        require(key != "config", "config-invalid",
                "config files cannot chain other config files");
        tokens.push_back("--" + key + "=" + t.substr(eq + 1));
    };
    for (char ch : text) {
        if (ch == '\n') flush();
        else line += ch;
    }
    flush();
    return tokens;
}

void expand_config_args(std::vector<std::string>& args) {
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        std::size_t last = i;
        if (args[i] == "--config") {
            require(i + 1 < args.size(), "config-invalid", "--config needs a file");
            path = args[i + 1];
            last = i + 1;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
        } else {
            continue;
        }
        std::vector<std::string> injected;
        for (std::string& tok : parse_config_file(path)) {
            std::string key = tok.substr(2, tok.find('=') - 2);
            if (!has_flag_token(args, key)) injected.push_back(tok);
        }
        args.erase(args.begin() + static_cast<long>(i),
                   args.begin() + static_cast<long>(last) + 1);
        args.insert(args.begin() + static_cast<long>(i), injected.begin(),
                    injected.end());
        for (std::size_t j = i; j < args.size(); ++j)
            require(args[j] != "--config" && args[j].rfind("--config=", 0) != 0,
                    "config-invalid", "at most one --config per invocation");
        break;
    }
}

// ---------------------------------------------------------------------------
// artifact plumbing
// ---------------------------------------------------------------------------
void write_artifact(const std::string& dir, const std::string& name, const json& j) {
    if (dir.empty()) return;
    fs::create_directories(dir);
    write_text_file((fs::path(dir) / name).string(), dump_canonical(j));
}

void write_csv(const std::string& path, const std::vector<CsvRow>& rows) {
    if (path.empty()) return;
    if (fs::path(path).has_parent_path())
        fs::create_directories(fs::path(path).parent_path());
    std::string text = std::string(csv_header()) + "\n";
    for (const CsvRow& r : rows) text += csv_line(r) + "\n";
    write_text_file(path, text);
}

json vector_json(const VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

json rows_json(const MatrixXd& m) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        arr.push_back(row);
    }
    return arr;
}

// A dataset file is accepted with or without labels; pipelines that build
// their own Y only need X.
MatrixXd load_inputs(const std::string& path) {
    json j = load_json_file(path);
    require(j.contains("X"), "config-invalid", "dataset file has no X");
    json wrap;
    wrap["X"] = j.at("X");
    wrap["Y"] = j.contains("Y") ? j.at("Y") : j.at("X");
    return dataset_from_json(wrap).X;
}

std::string act_desc(const ActivationSpec& s) {
    return std::string(to_string(s.kind)) + "(a=" + num17(s.anchor) + ")";
}

std::string widths_flag(const std::vector<int>& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(w[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------
struct GenArgs {
    int d0 = 2;
    int n = 8;
    std::uint64_t seed = 0;
    std::string dist = "normal";
    std::string pipeline = "smooth";
    std::string out = "data.json";
};

int cmd_gen_data(const GenArgs& g) {
    json j;
    if (g.pipeline == "sigmoid") {
        VectorXd x = gen_sigmoid_inputs(g.n, g.dist, g.seed);
        j["X"] = rows_json(x.transpose());
    } else {
        MatrixXd X = gen_smooth_inputs(g.d0, g.n, g.dist, g.seed);
        Assumption1Report rep = check_assumption1(X);
        j["X"] = rows_json(X);
        j["assumption1"] = {{"ok", rep.ok},
                            {"rank", rep.rank},
                            {"target_count", rep.target_count},
                            {"count_note", rep.note}};
    }
    if (fs::path(g.out).has_parent_path())
        fs::create_directories(fs::path(g.out).parent_path());
    write_text_file(g.out, dump_canonical(j));
    std::printf("inputs      %s (%s, d0=%d, N=%d, seed=%llu)\n", g.out.c_str(),
                g.dist.c_str(), g.pipeline == "sigmoid" ? 1 : g.d0, g.n,
                static_cast<unsigned long long>(g.seed));
    return 0;
}

// ---------------------------------------------------------------------------
// forge smooth (+ witness view, + smooth sweeps)
// ---------------------------------------------------------------------------
struct SmoothArgs {
    int d0 = 2;
    int n = 8;
    std::vector<int> widths = {6, 5, 4};
    int dout = 2;
    double alpha = 1.0;
    std::string dist = "normal";
    std::uint64_t seed = 0;
    ActArgs act;
    CertArgs cert;
    bool baseline = false;
    double stop_fraction = 0.0; // baseline early-exit at fraction of E(theta)
    double radius_floor = 0.0;  // extra uncapped sampling level when cap < floor
    std::string data_path;
    std::string out_dir;
    std::string csv;
};

void add_smooth_options(CLI::App* app, SmoothArgs& s) {
    app->add_option("--d0", s.d0, "input dimension")->capture_default_str();
    app->add_option("--n", s.n, "sample count")->capture_default_str();
    app->add_option("--widths", s.widths, "hidden widths, comma separated")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("--dout", s.dout, "output dimension")->capture_default_str();
    app->add_option("--alpha-scale", s.alpha, "dual mixing coefficient scale")
        ->capture_default_str();
    app->add_option("--dist", s.dist, "input distribution (normal|uniform)")
        ->capture_default_str();
    app->add_option("--seed", s.seed, "seed")->capture_default_str();
    add_act_options(app, s.act);
    add_cert_options(app, s.cert);
    app->add_flag("--baseline", s.baseline, "race a momentum-descent baseline");
    app->add_option("--stop-fraction", s.stop_fraction,
                    "baseline early exit below fraction * E(theta); 0 disables")
        ->capture_default_str();
    app->add_option("--radius-floor", s.radius_floor,
                    "also sample one uncapped level at this radius when the "
                    "sign-preservation cap certifies below it; 0 disables")
        ->capture_default_str();
    app->add_option("--data", s.data_path, "input JSON (X used, labels rebuilt)");
    app->add_option("--out-dir", s.out_dir, "artifact directory");
    app->add_option("--csv", s.csv, "summary CSV path (default <out-dir>/summary.csv)");
}

std::string smooth_config_string(const SmoothArgs& s, const ActivationSpec& spec,
                                 std::uint64_t seed) {
    std::string cfg = "pipeline=smooth;act=" + std::string(to_string(spec.kind)) +
                      ";anchor=" + num17(spec.anchor) + ";delta=" + num17(spec.delta) +
                      ";alpha=" + num17(s.alpha) + ";d0=" + std::to_string(s.d0) +
                      ";n=" + std::to_string(s.n) + ";widths=" + widths_string(s.widths) +
                      ";dout=" + std::to_string(s.dout) + ";dist=" + s.dist +
                      ";seed=" + std::to_string(seed) + ";k=" + std::to_string(s.cert.k) +
                      ";r0=" + num17(s.cert.r0);
    if (s.baseline) cfg += ";baseline=1";
    if (s.radius_floor > 0.0) cfg += ";floor=" + num17(s.radius_floor);
    return cfg;
}

// a replayable record: `--config <this file>` reproduces the run byte for byte
std::string smooth_config_file(const SmoothArgs& s, const ActivationSpec& spec,
                               std::uint64_t seed) {
    std::string t;
    t += "act=" + std::string(to_string(spec.kind)) + "\n";
    t += "anchor=" + num17(spec.anchor) + "\n";
    t += "delta=" + num17(spec.delta) + "\n";
    t += "d0=" + std::to_string(s.d0) + "\n";
    t += "n=" + std::to_string(s.n) + "\n";
    t += "widths=" + widths_flag(s.widths) + "\n";
    t += "dout=" + std::to_string(s.dout) + "\n";
    t += "alpha-scale=" + num17(s.alpha) + "\n";
    t += "dist=" + s.dist + "\n";
    t += "seed=" + std::to_string(seed) + "\n";
    t += "k=" + std::to_string(s.cert.k) + "\n";
    t += "r0=" + num17(s.cert.r0) + "\n";
    t += "r-min=" + num17(s.cert.r_min) + "\n";
    t += "baseline=" + std::string(s.baseline ? "1" : "0") + "\n";
    t += "stop-fraction=" + num17(s.stop_fraction) + "\n";
    t += "radius-floor=" + num17(s.radius_floor) + "\n";
    if (!s.data_path.empty()) t += "data=" + s.data_path + "\n";
    return t;
}

json smooth_bundle_json(const SmoothRun& run, const std::string& cfg) {
    const SmoothConstruction& c = run.c;
    json j;
    j["config"] = cfg;
    j["config_hash"] = hash_hex(cfg);
    j["network"] = to_json(c.params, c.spec);
    j["dataset"] = to_json(c.data);
    j["delta_y"] = rows_json(c.DeltaY);
    j["alpha"] = rows_json(c.alpha);
    j["sign"] = c.sign;
    j["dual"] = {{"count", c.dual.u.size()},
                 {"max_ortho_resid", c.dual.max_ortho_resid},
                 {"min_pos_margin", c.dual.min_pos_margin}};
    j["second_order"] = {{"ones_resid", c.residuals.ones_resid},
                         {"rows_resid", c.residuals.rows_resid},
                         {"cross_resid", c.residuals.cross_resid},
                         {"square_margin", c.residuals.square_margin}};
    json caps;
    caps["M"] = rows_json(c.caps.M);
    caps["M_min"] = c.caps.M_min;
    caps["row_floor"] = vector_json(c.caps.row_floor);
    caps["lipschitz"] = c.caps.lipschitz;
    caps["gamma"] = c.caps.gamma;
    caps["w_max"] = c.caps.w_max;
    j["constants"] = caps;
    j["witness"] = {{"network", to_json(c.witness.params, c.spec)},
                    {"eps", c.witness.eps},
                    {"v", c.witness.v},
                    {"S", c.witness.S},
                    {"m_norm_sq", c.witness.m_norm_sq},
                    {"gap", c.witness.gap},
                    {"min_margin", c.witness.min_margin},
                    {"model_resid", c.witness.model_resid},
                    {"loss_at_witness", c.witness.loss_at_witness}};
    j["loss_at_theta"] = c.loss_at_theta;
    j["certificate"] = to_json(run.cert, c.spec);
    j["halfspace"] = {{"min_margin", run.halfspace.min_margin},
                      {"samples", run.halfspace.samples}};
    if (run.floor)
        j["floor_check"] = {{"radius", run.floor->radius},
                            {"min_delta", run.floor->min_delta},
                            {"tested", run.floor->tested},
                            {"clean", run.floor->clean}};
    if (run.baseline) {
        j["baseline"] = {{"best_loss", run.baseline->best_loss},
                         {"restart_losses", run.baseline->restart_losses},
                         {"total_steps", run.baseline->total_steps}};
    }
    return j;
}

CsvRow smooth_csv_row(const SmoothArgs& s, const SmoothRun& run,
                      const std::string& cfg, std::uint64_t seed) {
    CsvRow row;
    row.seed = seed;
    row.pipeline = "smooth";
    row.activation = to_string(run.c.spec.kind);
    row.d0 = s.d0;
    row.n = s.n;
    row.widths = s.widths;
    row.loss_at_theta = run.c.loss_at_theta;
    row.witness_gap = run.c.witness.gap;
    row.grad_residual = run.cert.gradient_residual;
    row.certified_radius = run.cert.certified_radius;
    row.min_loss_delta = run.cert.min_loss_delta;
    row.halfspace_margin = run.halfspace.min_margin;
    if (run.baseline) row.baseline_loss = run.baseline->best_loss;
    row.verdict = run.cert.verdict;
    row.config_hash = hash_hex(cfg);
    return row;
}

SmoothRun execute_smooth(const SmoothArgs& s, std::uint64_t seed,
                         const ActivationSpec& spec) {
    MatrixXd X = s.data_path.empty() ? gen_smooth_inputs(s.d0, s.n, s.dist, seed)
                                     : load_inputs(s.data_path);
    require(static_cast<int>(X.rows()) == s.d0 && static_cast<int>(X.cols()) == s.n,
            "config-invalid", "--d0/--n disagree with the loaded data shape");
    BaselineConfig bcfg;
    SmoothRun run = run_smooth(X, s.widths, s.dout, spec, s.alpha, seed, s.cert.k,
                               s.cert.r0, false, bcfg, s.radius_floor);
    if (s.baseline) {
        bcfg.stop_below = s.stop_fraction > 0.0 ? s.stop_fraction * run.c.loss_at_theta
                                                : 0.0;
        run.baseline = train_baseline(run.c.arch, run.c.data, spec, bcfg, seed);
    }
    return run;
}

void print_smooth_summary(const SmoothRun& run, std::uint64_t seed) {
    std::printf("seed %llu: %s  loss=%s  gap=%s  grad=%.3g  radius=%.6g  "
                "min_delta=%.3g  halfspace=%.3g\n",
                static_cast<unsigned long long>(seed), run.cert.verdict.c_str(),
                num17(run.c.loss_at_theta).c_str(), num17(run.c.witness.gap).c_str(),
                run.cert.gradient_residual, run.cert.certified_radius,
                run.cert.min_loss_delta, run.halfspace.min_margin);
    if (run.floor)
        std::printf("seed %llu: floor check at %.3g: %s (min_delta=%.3g)\n",
                    static_cast<unsigned long long>(seed), run.floor->radius,
                    run.floor->clean ? "clean" : "NOT CLEAN", run.floor->min_delta);
    if (run.baseline)
        std::printf("seed %llu: baseline best=%s\n",
                    static_cast<unsigned long long>(seed),
                    num17(run.baseline->best_loss).c_str());
}

int cmd_forge_smooth(const SmoothArgs& s) {
    ActivationSpec spec = resolve_spec(s.act);
    std::string cfg = smooth_config_string(s, spec, s.seed);
    SmoothRun run = execute_smooth(s, s.seed, spec);

    std::printf("pipeline    smooth %s widths=%s\n", act_desc(spec).c_str(),
                widths_string(s.widths).c_str());
    print_smooth_summary(run, s.seed);

    write_artifact(s.out_dir, "network.json", to_json(run.c.params, spec));
    write_artifact(s.out_dir, "data.json", to_json(run.c.data));
    write_artifact(s.out_dir, "witness.json", to_json(run.c.witness.params, spec));
    write_artifact(s.out_dir, "certificate.json", to_json(run.cert, spec));
    write_artifact(s.out_dir, "bundle.json", smooth_bundle_json(run, cfg));
    if (!s.out_dir.empty())
        write_text_file((fs::path(s.out_dir) / "config.txt").string(),
                        smooth_config_file(s, spec, s.seed));
    std::string csv = s.csv;
    if (csv.empty() && !s.out_dir.empty())
        csv = (fs::path(s.out_dir) / "summary.csv").string();
    write_csv(csv, {smooth_csv_row(s, run, cfg, s.seed)});

    return verdict_exit(run.cert.verdict);
}

// witness: rebuild a construction and report the sub-optimality evidence in
// detail (the pushed point, the exact quadratic, the three validations).
int cmd_witness(const SmoothArgs& s) {
    ActivationSpec spec = resolve_spec(s.act);
    MatrixXd X = s.data_path.empty() ? gen_smooth_inputs(s.d0, s.n, s.dist, s.seed)
                                     : load_inputs(s.data_path);
    SmoothConstruction c = forge_smooth(X, s.widths, s.dout, spec, s.alpha, s.seed);
    const WitnessResult& w = c.witness;

    double direct_gap = c.loss_at_theta - w.loss_at_witness_direct;
    std::printf("pipeline    witness %s widths=%s seed=%llu\n", act_desc(spec).c_str(),
                widths_string(s.widths).c_str(),
                static_cast<unsigned long long>(s.seed));
    std::printf("loss        %s\n", num17(c.loss_at_theta).c_str());
    std::printf("eps         %s\n", num17(w.eps).c_str());
    std::printf("v*          %s\n", num17(w.v).c_str());
    std::printf("S           %s\n", num17(w.S).c_str());
    std::printf("m_norm_sq   %s\n", num17(w.m_norm_sq).c_str());
    std::printf("gap         %s\n", num17(w.gap).c_str());
    std::printf("margin      %s\n", num17(w.min_margin).c_str());
    std::printf("model_resid %.3g\n", w.model_resid);
    std::printf("direct_gap  %s (fp-noise limited)\n", num17(direct_gap).c_str());

    if (!s.out_dir.empty()) {
        write_artifact(s.out_dir, "witness.json", to_json(w.params, spec));
        json rep;
        rep["eps"] = w.eps;
        rep["v"] = w.v;
        rep["S"] = w.S;
        rep["m_norm_sq"] = w.m_norm_sq;
        rep["gap"] = w.gap;
        rep["min_margin"] = w.min_margin;
        rep["model_resid"] = w.model_resid;
        rep["loss_at_theta"] = c.loss_at_theta;
        rep["loss_at_witness"] = w.loss_at_witness;
        rep["loss_at_witness_direct"] = w.loss_at_witness_direct;
        write_artifact(s.out_dir, "witness-report.json", rep);
    }
    bool ok = w.gap > 0.0 && w.min_margin > 0.0 && w.model_resid < 1e-9;
    return ok ? 0 : rc_inconclusive;
}

// ---------------------------------------------------------------------------
// forge sigmoid
// ---------------------------------------------------------------------------
struct SigmoidArgs {
    int n = 6;
    int d1 = 8;
    double alpha = 1.0;
    int v_sign = 1;
    double perturb = 1e-3;
    int trials = 0;
    double baseline_fraction = 0.01;
    std::string dist = "canonical";
    std::uint64_t seed = 0;
    CertArgs cert{10000, 1e-2, 1e-7};
    std::string data_path;
    std::string out_dir;
    std::string csv;
};

std::string sigmoid_config_string(const SigmoidArgs& g) {
    return "pipeline=sigmoid;n=" + std::to_string(g.n) + ";d1=" + std::to_string(g.d1) +
           ";alpha=" + num17(g.alpha) + ";vsign=" + std::to_string(g.v_sign) +
           ";perturb=" + num17(g.perturb) + ";trials=" + std::to_string(g.trials) +
           ";fraction=" + num17(g.baseline_fraction) + ";dist=" + g.dist +
           ";seed=" + std::to_string(g.seed) + ";k=" + std::to_string(g.cert.k) +
           ";r0=" + num17(g.cert.r0);
}

std::string sigmoid_config_file(const SigmoidArgs& g) {
    std::string t;
    t += "n=" + std::to_string(g.n) + "\n";
    t += "width=" + std::to_string(g.d1) + "\n";
    t += "alpha-scale=" + num17(g.alpha) + "\n";
    t += "v-sign=" + std::to_string(g.v_sign) + "\n";
    t += "perturb=" + num17(g.perturb) + "\n";
    t += "trials=" + std::to_string(g.trials) + "\n";
    t += "baseline-fraction=" + num17(g.baseline_fraction) + "\n";
    t += "dist=" + g.dist + "\n";
    t += "seed=" + std::to_string(g.seed) + "\n";
    t += "k=" + std::to_string(g.cert.k) + "\n";
    t += "r0=" + num17(g.cert.r0) + "\n";
    t += "r-min=" + num17(g.cert.r_min) + "\n";
    if (!g.data_path.empty()) t += "data=" + g.data_path + "\n";
    return t;
}

int cmd_forge_sigmoid(const SigmoidArgs& g) {
    VectorXd x;
    if (g.data_path.empty()) {
        x = gen_sigmoid_inputs(g.n, g.dist, g.seed);
    } else {
        MatrixXd m = load_inputs(g.data_path);
        require(m.rows() == 1, "config-invalid", "sigmoid pipeline wants 1-row inputs");
        x = m.row(0).transpose();
    }
    std::string cfg = sigmoid_config_string(g);

    SigmoidConstruction c = forge_sigmoid(x, g.d1, g.alpha, g.v_sign, g.seed);
    NeuronConditions nc = check_neuron_conditions(
        c.v, VectorXd::Constant(g.d1, c.w), VectorXd::Constant(g.d1, c.b), c.x, c.y);
    MergedPoint merged = merge_to_one_neuron(c);

    std::printf("pipeline    sigmoid d1=%d N=%d seed=%llu\n", g.d1, g.n,
                static_cast<unsigned long long>(g.seed));
    std::printf("loss        %s\n", num17(c.loss).c_str());
    std::printf("grad        %.3g\n", c.grad_inf_norm);
    std::printf("conditions  eq_resid=%.3g margin=%.3g (%s)\n", nc.max_eq_resid,
                nc.min_margin, nc.holds ? "hold" : "VIOLATED");
    std::printf("merged      grad=%.3g eigs=[%s, %s]\n", merged.grad_resid,
                num17(merged.H_eigs(0)).c_str(), num17(merged.H_eigs(1)).c_str());

    json bundle;
    bundle["config"] = cfg;
    bundle["config_hash"] = hash_hex(cfg);
    bundle["x"] = vector_json(c.x);
    bundle["y"] = vector_json(c.y);
    bundle["v"] = vector_json(c.v);
    bundle["w"] = c.w;
    bundle["b"] = c.b;
    bundle["z"] = vector_json(c.z);
    bundle["delta_y"] = vector_json(c.delta_y);
    bundle["loss"] = c.loss;
    bundle["grad_inf_norm"] = c.grad_inf_norm;
    bundle["dual"] = {{"count", c.dual.u.size()},
                      {"max_ortho_resid", c.dual.max_ortho_resid},
                      {"min_pos_margin", c.dual.min_pos_margin}};
    bundle["neuron_conditions"] = {{"max_eq_resid", nc.max_eq_resid},
                                   {"min_margin", nc.min_margin},
                                   {"min_margin_rel", nc.min_margin_rel},
                                   {"holds", nc.holds}};
    bundle["merged"] = {{"v", merged.p.v},
                        {"w", merged.p.w},
                        {"b", merged.p.b},
                        {"loss", merged.loss},
                        {"grad_resid", merged.grad_resid},
                        {"eigs", {merged.H_eigs(0), merged.H_eigs(1)}}};

    std::vector<CsvRow> rows;
    int passed = 0;
    int worst = rc_certified;
    json trial_rows = json::array();
    for (int t = 0; t < g.trials; ++t) {
        SigmoidTrial tr = run_sigmoid_trial(merged, c.x, c.y, g.d1, t, g.perturb,
                                            g.seed, g.cert.k, g.cert.r0,
                                            g.baseline_fraction);
        if (tr.ok) ++passed;
        worst = std::max(worst, tr.cert.verdict.empty()
                                    ? rc_inconclusive
                                    : verdict_exit(tr.cert.verdict));

        CsvRow row;
        row.seed = static_cast<std::uint64_t>(t);
        row.pipeline = "sigmoid";
        row.activation = "sigmoid";
        row.d0 = 1;
        row.n = g.n;
        row.widths = {g.d1};
        row.loss_at_theta = tr.wide_loss;
        row.grad_residual = tr.cert.gradient_residual;
        row.certified_radius = tr.cert.certified_radius;
        row.min_loss_delta = tr.cert.min_loss_delta;
        row.baseline_loss = tr.baseline.best_loss;
        row.verdict = tr.cert.verdict.empty() ? "inconclusive" : tr.cert.verdict;
        row.config_hash = hash_hex(cfg);
        rows.push_back(row);

        json jt;
        jt["index"] = tr.index;
        jt["ok"] = tr.ok;
        if (!tr.ok) jt["reason"] = tr.fail_reason;
        jt["relocated"] = {{"iterations", tr.reloc.iterations},
                           {"grad_resid", tr.reloc.grad_resid},
                           {"distance", tr.reloc.distance},
                           {"loss", tr.reloc.loss},
                           {"eigs", {tr.reloc.H_eigs(0), tr.reloc.H_eigs(1)}}};
        jt["wide_loss"] = tr.wide_loss;
        jt["split_resid"] = tr.split_resid;
        jt["verdict"] = row.verdict;
        jt["certified_radius"] = tr.cert.certified_radius;
        jt["min_loss_delta"] = tr.cert.min_loss_delta;
        jt["baseline_loss"] = tr.baseline.best_loss;
        trial_rows.push_back(jt);

        std::printf("trial %3d: %s reloc_grad=%.3g radius=%.3g baseline=%.3g%s\n", t,
                    row.verdict.c_str(), tr.reloc.grad_resid,
                    tr.cert.certified_radius, tr.baseline.best_loss,
                    tr.ok ? "" : "  <- FAILED");
    }
    bundle["trials"] = {{"requested", g.trials}, {"passed", passed}, {"rows", trial_rows}};
    if (g.trials > 0)
        std::printf("trials      %d/%d passed\n", passed, g.trials);

    write_artifact(g.out_dir, "bundle.json", bundle);
    if (!g.out_dir.empty())
        write_text_file((fs::path(g.out_dir) / "config.txt").string(),
                        sigmoid_config_file(g));
    std::string csv = g.csv;
    if (csv.empty() && !g.out_dir.empty())
        csv = (fs::path(g.out_dir) / "summary.csv").string();
    write_csv(csv, rows);

    if (g.trials == 0) return nc.holds ? 0 : rc_inconclusive;
    if (passed == g.trials) return 0;
    return worst == rc_certified ? rc_inconclusive : worst;
}

// ---------------------------------------------------------------------------
// forge piecewise
// ---------------------------------------------------------------------------
struct PiecewiseArgs {
    int d0 = 2;
    int n = 6;
    std::vector<int> widths = {4, 3};
    int dout = 2;
    std::string dist = "normal";
    std::uint64_t seed = 0;
    ActArgs act{"relu", std::nullopt, 0.5};
    CertArgs cert;
    std::string data_path;
    std::string out_dir;
    std::string csv;
};

std::string piecewise_config_string(const PiecewiseArgs& p, const ActivationSpec& spec) {
    return "pipeline=piecewise;act=" + std::string(to_string(spec.kind)) +
           ";anchor=" + num17(spec.anchor) + ";delta=" + num17(spec.delta) +
           ";d0=" + std::to_string(p.d0) + ";n=" + std::to_string(p.n) +
           ";widths=" + widths_string(p.widths) + ";dout=" + std::to_string(p.dout) +
           ";dist=" + p.dist + ";seed=" + std::to_string(p.seed) +
           ";k=" + std::to_string(p.cert.k) + ";r0=" + num17(p.cert.r0);
}

std::string piecewise_config_file(const PiecewiseArgs& p, const ActivationSpec& spec) {
    std::string t;
    t += "act=" + std::string(to_string(spec.kind)) + "\n";
    t += "anchor=" + num17(spec.anchor) + "\n";
    t += "delta=" + num17(spec.delta) + "\n";
    t += "d0=" + std::to_string(p.d0) + "\n";
    t += "n=" + std::to_string(p.n) + "\n";
    t += "widths=" + widths_flag(p.widths) + "\n";
    t += "dout=" + std::to_string(p.dout) + "\n";
    t += "dist=" + p.dist + "\n";
    t += "seed=" + std::to_string(p.seed) + "\n";
    t += "k=" + std::to_string(p.cert.k) + "\n";
    t += "r0=" + num17(p.cert.r0) + "\n";
    t += "r-min=" + num17(p.cert.r_min) + "\n";
    if (!p.data_path.empty()) t += "data=" + p.data_path + "\n";
    return t;
}

int cmd_forge_piecewise(const PiecewiseArgs& p) {
    ActivationSpec spec = resolve_spec(p.act);
    require(spec.piecewise(), "config-invalid",
            "forge piecewise needs an anchor on a linear segment");

    MatrixXd X;
    MatrixXd Y;
    if (p.data_path.empty()) {
        X = gen_smooth_inputs(p.d0, p.n, p.dist, p.seed);
        Y = gen_piecewise_labels(X, p.dout, p.widths, spec, p.seed);
    } else {
        json j = load_json_file(p.data_path);
        require(j.contains("X") && j.contains("Y"), "config-invalid",
                "piecewise pipeline wants a dataset file with X and Y");
        Dataset d = dataset_from_json(j);
        X = d.X;
        Y = d.Y;
    }

    std::string cfg = piecewise_config_string(p, spec);
    PiecewiseRun run = run_piecewise(X, Y, p.widths, spec, p.seed, p.cert.k, p.cert.r0);

    double rel = std::abs(run.c.loss - run.c.ref_residual) /
                 std::max(1.0, std::abs(run.c.ref_residual));
    std::printf("pipeline    piecewise %s widths=%s branch=%s\n", act_desc(spec).c_str(),
                widths_string(p.widths).c_str(), run.c.branch.c_str());
    std::printf("loss        %s (projection residual %s, rel diff %.3g)\n",
                num17(run.c.loss).c_str(), num17(run.c.ref_residual).c_str(), rel);
    std::printf("margin      %s\n", num17(run.c.min_segment_margin).c_str());
    std::printf("verdict     %s radius=%.6g min_delta=%.3g halfspace=%.3g\n",
                run.cert.verdict.c_str(), run.cert.certified_radius,
                run.cert.min_loss_delta, run.halfspace.min_margin);

    json bundle;
    bundle["config"] = cfg;
    bundle["config_hash"] = hash_hex(cfg);
    bundle["network"] = to_json(run.c.params, spec);
    bundle["dataset"] = to_json(run.c.data);
    bundle["branch"] = run.c.branch;
    bundle["loss"] = run.c.loss;
    bundle["ref_residual"] = run.c.ref_residual;
    bundle["rel_gap"] = rel;
    bundle["min_segment_margin"] = run.c.min_segment_margin;
    bundle["grad_inf_norm"] = run.c.grad_inf_norm;
    bundle["ranks"] = {{"data", run.c.rank_data},
                       {"aug", run.c.rank_aug},
                       {"hidden", run.c.rank_hidden}};
    bundle["certificate"] = to_json(run.cert, spec);
    bundle["halfspace"] = {{"min_margin", run.halfspace.min_margin},
                           {"samples", run.halfspace.samples}};

    write_artifact(p.out_dir, "network.json", to_json(run.c.params, spec));
    write_artifact(p.out_dir, "data.json", to_json(run.c.data));
    write_artifact(p.out_dir, "certificate.json", to_json(run.cert, spec));
    write_artifact(p.out_dir, "bundle.json", bundle);
    if (!p.out_dir.empty())
        write_text_file((fs::path(p.out_dir) / "config.txt").string(),
                        piecewise_config_file(p, spec));

    CsvRow row;
    row.seed = p.seed;
    row.pipeline = "piecewise";
    row.activation = to_string(spec.kind);
    row.d0 = p.d0;
    row.n = p.n;
    row.widths = p.widths;
    row.loss_at_theta = run.c.loss;
    row.grad_residual = run.cert.gradient_residual;
    row.certified_radius = run.cert.certified_radius;
    row.min_loss_delta = run.cert.min_loss_delta;
    row.halfspace_margin = run.halfspace.min_margin;
    row.verdict = run.cert.verdict;
    row.config_hash = hash_hex(cfg);
    std::string csv = p.csv;
    if (csv.empty() && !p.out_dir.empty())
        csv = (fs::path(p.out_dir) / "summary.csv").string();
    write_csv(csv, {row});

    return verdict_exit(run.cert.verdict);
}

// ---------------------------------------------------------------------------
// certify (independent of any forge; loads stored artifacts)
// ---------------------------------------------------------------------------
struct CertifyArgs {
    std::string network;
    std::string data;
    std::string witness;
    std::string out;
    std::string counterexample_out;
    CertArgs cert;
    std::uint64_t seed = 0;
    bool positive_cap = false;
    double cap = 0.0;
};

int cmd_certify(const CertifyArgs& a) {
    NetworkBundle nb = network_from_json(load_json_file(a.network));
    Dataset data = dataset_from_json(load_json_file(a.data));
    check_shapes(nb.params, static_cast<int>(data.X.rows()),
                 static_cast<int>(data.X.cols()));
    require(data.Y.cols() == data.X.cols(), "shape-mismatch",
            "dataset X and Y disagree on the sample count");

    CertifyOptions opt;
    opt.samples = a.cert.k;
    opt.r0 = a.cert.r0;
    opt.r_min = a.cert.r_min;
    opt.seed = a.seed;
    if (a.positive_cap) opt.radius_cap = sign_preservation_cap(nb.params);
    if (a.cap > 0.0)
        opt.radius_cap = opt.radius_cap ? std::min(*opt.radius_cap, a.cap) : a.cap;

    std::optional<NetworkParams> wdir;
    if (!a.witness.empty()) {
        NetworkBundle wb = network_from_json(load_json_file(a.witness));
        wdir = wb.params;
        axpy(*wdir, -1.0, nb.params);
    }

    Certificate cert = certify_local_min(nb.params, data, nb.spec, opt,
                                         wdir ? &*wdir : nullptr);
    std::printf("verdict     %s\n", cert.verdict.c_str());
    std::printf("loss        %s\n", num17(cert.loss_at_point).c_str());
    std::printf("grad        %.3g\n", cert.gradient_residual);
    std::printf("radius      %.6g\n", cert.certified_radius);
    std::printf("min_delta   %.3g\n", cert.min_loss_delta);

    if (!a.out.empty()) {
        if (fs::path(a.out).has_parent_path())
            fs::create_directories(fs::path(a.out).parent_path());
        write_text_file(a.out, dump_canonical(to_json(cert, nb.spec)));
    }
    if (cert.has_counterexample && !a.counterexample_out.empty()) {
        json ce;
        ce["network"] = to_json(cert.counterexample, nb.spec);
        ce["loss"] = cert.counterexample_loss;
        ce["radius"] = cert.counterexample_radius;
        ce["loss_at_point"] = cert.loss_at_point;
        if (fs::path(a.counterexample_out).has_parent_path())
            fs::create_directories(fs::path(a.counterexample_out).parent_path());
        write_text_file(a.counterexample_out, dump_canonical(ce));
        std::printf("stored counterexample: %s (loss %s)\n",
                    a.counterexample_out.c_str(),
                    num17(cert.counterexample_loss).c_str());
    }
    return verdict_exit(cert.verdict);
}

// ---------------------------------------------------------------------------
// train-baseline
// ---------------------------------------------------------------------------
struct BaselineArgs {
    std::string data;
    std::vector<int> widths = {6};
    ActArgs act{"sigmoid", std::nullopt, 0.5};
    BaselineConfig cfg;
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_train_baseline(const BaselineArgs& a) {
    Dataset data = dataset_from_json(load_json_file(a.data));
    ActivationSpec spec = resolve_spec(a.act);
    Architecture arch{static_cast<int>(data.X.rows()), a.widths,
                      static_cast<int>(data.Y.rows())};
    arch.validate();
    BaselineResult res = train_baseline(arch, data, spec, a.cfg, a.seed);
    std::printf("best_loss   %s\n", num17(res.best_loss).c_str());
    for (std::size_t i = 0; i < res.restart_losses.size(); ++i)
        std::printf("restart %zu   %s\n", i, num17(res.restart_losses[i]).c_str());
    if (!a.out.empty()) {
        json j;
        j["best_loss"] = res.best_loss;
        j["restart_losses"] = res.restart_losses;
        j["total_steps"] = res.total_steps;
        if (fs::path(a.out).has_parent_path())
            fs::create_directories(fs::path(a.out).parent_path());
        write_text_file(a.out, dump_canonical(j));
    }
    return 0;
}

// ---------------------------------------------------------------------------
// sweep: one pipeline config over a seed range, one CSV, optional artifacts
// ---------------------------------------------------------------------------
struct SweepArgs {
    std::string pipeline = "smooth";
    int seeds = 10;
    std::uint64_t seed_base = 0;
    bool artifacts = false;
    SmoothArgs smooth;
    PiecewiseArgs piecewise;
    std::string out_dir = "sweep-out";
};

int cmd_sweep(const SweepArgs& sw) {
    require(sw.pipeline == "smooth" || sw.pipeline == "piecewise", "config-invalid",
            "sweep handles the smooth and piecewise pipelines; batched sigmoid "
            "trials live under `forge sigmoid --trials`");
    std::vector<CsvRow> rows;
    int worst = rc_certified;

    for (int i = 0; i < sw.seeds; ++i) {
        std::uint64_t seed = sw.seed_base + static_cast<std::uint64_t>(i);
        if (sw.pipeline == "smooth") {
            SmoothArgs s = sw.smooth;
            s.seed = seed;
            s.out_dir = sw.artifacts
                            ? (fs::path(sw.out_dir) / ("seed-" + std::to_string(seed)))
                                  .string()
                            : "";
            s.csv = "";
            ActivationSpec spec = resolve_spec(s.act);
            std::string cfg = smooth_config_string(s, spec, seed);
            SmoothRun run = execute_smooth(s, seed, spec);
            print_smooth_summary(run, seed);
            if (!s.out_dir.empty()) {
                write_artifact(s.out_dir, "bundle.json", smooth_bundle_json(run, cfg));
                write_artifact(s.out_dir, "certificate.json", to_json(run.cert, spec));
            }
            bool floor_ok = run.floor && run.floor->clean &&
                            run.floor->min_delta >= -loss_decrease_tol;
            int rc = verdict_exit(run.cert.verdict);
            if (rc == rc_certified && s.radius_floor > 0.0 &&
                run.cert.certified_radius < s.radius_floor && !floor_ok)
                rc = rc_inconclusive; // certified, but below the demanded floor
            worst = std::max(worst, rc);
            rows.push_back(smooth_csv_row(s, run, cfg, seed));
        } else {
            PiecewiseArgs p = sw.piecewise;
            p.seed = seed;
            ActivationSpec spec = resolve_spec(p.act);
            MatrixXd X = gen_smooth_inputs(p.d0, p.n, p.dist, seed);
            MatrixXd Y = gen_piecewise_labels(X, p.dout, p.widths, spec, seed);
            std::string cfg = piecewise_config_string(p, spec);
            PiecewiseRun run = run_piecewise(X, Y, p.widths, spec, seed, p.cert.k,
                                             p.cert.r0);
            std::printf("seed %llu: %s loss=%s radius=%.6g\n",
                        static_cast<unsigned long long>(seed),
                        run.cert.verdict.c_str(), num17(run.c.loss).c_str(),
                        run.cert.certified_radius);
            worst = std::max(worst, verdict_exit(run.cert.verdict));

            CsvRow row;
            row.seed = seed;
            row.pipeline = "piecewise";
            row.activation = to_string(spec.kind);
            row.d0 = p.d0;
            row.n = p.n;
            row.widths = p.widths;
            row.loss_at_theta = run.c.loss;
            row.grad_residual = run.cert.gradient_residual;
            row.certified_radius = run.cert.certified_radius;
            row.min_loss_delta = run.cert.min_loss_delta;
            row.halfspace_margin = run.halfspace.min_margin;
            row.verdict = run.cert.verdict;
            row.config_hash = hash_hex(cfg);
            rows.push_back(row);
        }
    }

    write_csv((fs::path(sw.out_dir) / "summary.csv").string(), rows);
    std::printf("wrote %zu rows to %s\n", rows.size(),
                (fs::path(sw.out_dir) / "summary.csv").string().c_str());
    return worst;
}

// ---------------------------------------------------------------------------
// report: aggregate a summary CSV
// ---------------------------------------------------------------------------
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

int cmd_report(const std::string& csv_path) {
    std::string text = read_text_file(csv_path);
    std::vector<std::string> lines;
    std::string cur;
    for (char ch : text) {
        if (ch == '\n') {
            if (!cur.empty()) lines.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    require(!lines.empty() && lines.front() == csv_header(), "config-invalid",
            "not a summary CSV (header mismatch)");

    long certified = 0, refuted = 0, other = 0;
    double worst_grad = 0.0, min_radius = std::numeric_limits<double>::infinity();
    double worst_delta = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> f = split_csv_line(lines[i]);
        require(f.size() == 15, "config-invalid", "malformed CSV row");
        const std::string& verdict = f[13];
        if (verdict == "certified-local-min")
            ++certified;
        else if (verdict == "refuted")
            ++refuted;
        else
            ++other;
        worst_grad = std::max(worst_grad, std::stod(f[8]));
        if (verdict == "certified-local-min")
            min_radius = std::min(min_radius, std::stod(f[9]));
        worst_delta = std::min(worst_delta, std::stod(f[10]));
    }
    std::printf("rows        %zu\n", lines.size() - 1);
    std::printf("certified   %ld\n", certified);
    std::printf("refuted     %ld\n", refuted);
    std::printf("other       %ld\n", other);
    std::printf("worst grad  %.3g\n", worst_grad);
    if (certified > 0) std::printf("min radius  %.6g\n", min_radius);
    std::printf("worst delta %.3g\n", worst_delta);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"construct and certify sub-optimal local minima of neural-network "
                 "training losses"};
    app.require_subcommand(1);

    GenArgs gen;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "draw admissible inputs");
    gen_cmd->add_option("--d0", gen.d0, "input dimension")->capture_default_str();
    gen_cmd->add_option("--n", gen.n, "sample count")->capture_default_str();
    gen_cmd->add_option("--seed", gen.seed, "seed")->capture_default_str();
    gen_cmd->add_option("--dist", gen.dist, "normal|uniform")->capture_default_str();
    gen_cmd->add_option("--pipeline", gen.pipeline, "smooth|sigmoid")
        ->capture_default_str();
    gen_cmd->add_option("--out", gen.out, "output JSON")->capture_default_str();
    add_config_file(gen_cmd);

    CLI::App* forge_cmd = app.add_subcommand("forge", "build a certified construction");
    forge_cmd->require_subcommand(1);

    SmoothArgs smooth;
    CLI::App* smooth_cmd =
        forge_cmd->add_subcommand("smooth", "deep pipeline for smooth activations");
    add_smooth_options(smooth_cmd, smooth);
    add_config_file(smooth_cmd);

    SigmoidArgs sigmoid;
    CLI::App* sigmoid_cmd = forge_cmd->add_subcommand(
        "sigmoid", "single-hidden-layer pipeline with relocation trials");
    sigmoid_cmd->add_option("--n", sigmoid.n, "sample count")->capture_default_str();
    sigmoid_cmd->add_option("--width", sigmoid.d1, "hidden width (>= N)")
        ->capture_default_str();
    sigmoid_cmd->add_option("--alpha-scale", sigmoid.alpha, "dual coefficient scale")
        ->capture_default_str();
    sigmoid_cmd->add_option("--v-sign", sigmoid.v_sign, "+1 or -1 output weights")
        ->capture_default_str();
    sigmoid_cmd->add_option("--perturb", sigmoid.perturb, "data perturbation radius")
        ->capture_default_str();
    sigmoid_cmd->add_option("--trials", sigmoid.trials, "perturb/relocate/split trials")
        ->capture_default_str();
    sigmoid_cmd
        ->add_option("--baseline-fraction", sigmoid.baseline_fraction,
                     "trial passes when the baseline loss undercuts this fraction "
                     "of the construction loss")
        ->capture_default_str();
    sigmoid_cmd->add_option("--dist", sigmoid.dist, "canonical|normal|uniform")
        ->capture_default_str();
    sigmoid_cmd->add_option("--seed", sigmoid.seed, "seed")->capture_default_str();
    add_cert_options(sigmoid_cmd, sigmoid.cert);
    sigmoid_cmd->add_option("--data", sigmoid.data_path, "input JSON (1-row X)");
    sigmoid_cmd->add_option("--out-dir", sigmoid.out_dir, "artifact directory");
    sigmoid_cmd->add_option("--csv", sigmoid.csv, "summary CSV path");
    add_config_file(sigmoid_cmd);

    PiecewiseArgs piecewise;
    CLI::App* piecewise_cmd = forge_cmd->add_subcommand(
        "piecewise", "linear-segment pipeline for relu-family activations");
    piecewise_cmd->add_option("--d0", piecewise.d0, "input dimension")
        ->capture_default_str();
    piecewise_cmd->add_option("--n", piecewise.n, "sample count")->capture_default_str();
    piecewise_cmd->add_option("--widths", piecewise.widths, "hidden widths")
        ->delimiter(',')
        ->capture_default_str();
    piecewise_cmd->add_option("--dout", piecewise.dout, "output dimension")
        ->capture_default_str();
    piecewise_cmd->add_option("--dist", piecewise.dist, "normal|uniform")
        ->capture_default_str();
    piecewise_cmd->add_option("--seed", piecewise.seed, "seed")->capture_default_str();
    add_act_options(piecewise_cmd, piecewise.act);
    add_cert_options(piecewise_cmd, piecewise.cert);
    piecewise_cmd->add_option("--data", piecewise.data_path,
                              "dataset JSON with X and Y");
    piecewise_cmd->add_option("--out-dir", piecewise.out_dir, "artifact directory");
    piecewise_cmd->add_option("--csv", piecewise.csv, "summary CSV path");
    add_config_file(piecewise_cmd);

    CertifyArgs certify;
    CLI::App* certify_cmd =
        app.add_subcommand("certify", "certify or refute a stored network");
    certify_cmd->add_option("--network", certify.network, "network JSON")->required();
    certify_cmd->add_option("--data", certify.data, "dataset JSON")->required();
    certify_cmd->add_option("--witness", certify.witness,
                            "network JSON whose direction the sampler must probe");
    certify_cmd->add_option("--out", certify.out, "certificate JSON path");
    certify_cmd->add_option("--counterexample-out", certify.counterexample_out,
                            "where to store a refuting point");
    add_cert_options(certify_cmd, certify.cert);
    certify_cmd->add_option("--seed", certify.seed, "seed")->capture_default_str();
    certify_cmd->add_flag("--positive-cap", certify.positive_cap,
                          "cap the radius at half the smallest positive weight "
                          "(sign-preserving constructions)");
    certify_cmd->add_option("--cap", certify.cap, "explicit radius cap");
    add_config_file(certify_cmd);

    SmoothArgs witness;
    CLI::App* witness_cmd = app.add_subcommand(
        "witness", "rebuild a smooth construction and examine its witness");
    add_smooth_options(witness_cmd, witness);
    add_config_file(witness_cmd);

    BaselineArgs baseline;
    CLI::App* baseline_cmd =
        app.add_subcommand("train-baseline", "momentum descent from random starts");
    baseline_cmd->add_option("--data", baseline.data, "dataset JSON")->required();
    baseline_cmd->add_option("--widths", baseline.widths, "hidden widths")
        ->delimiter(',')
        ->capture_default_str();
    add_act_options(baseline_cmd, baseline.act);
    baseline_cmd->add_option("--restarts", baseline.cfg.restarts, "random restarts")
        ->capture_default_str();
    baseline_cmd->add_option("--steps", baseline.cfg.steps, "steps per restart")
        ->capture_default_str();
    baseline_cmd->add_option("--step", baseline.cfg.step, "step size")
        ->capture_default_str();
    baseline_cmd->add_option("--momentum", baseline.cfg.momentum, "momentum")
        ->capture_default_str();
    baseline_cmd->add_option("--init-scale", baseline.cfg.init_scale,
                             "initialization scale")
        ->capture_default_str();
    baseline_cmd->add_option("--stop-below", baseline.cfg.stop_below,
                             "early exit when the loss drops below this")
        ->capture_default_str();
    baseline_cmd->add_option("--seed", baseline.seed, "seed")->capture_default_str();
    baseline_cmd->add_option("--out", baseline.out, "report JSON path");
    add_config_file(baseline_cmd);

    SweepArgs sweep;
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "one config over a seed range");
    sweep_cmd->add_option("--pipeline", sweep.pipeline, "smooth|piecewise")
        ->capture_default_str();
    sweep_cmd->add_option("--seeds", sweep.seeds, "number of seeds")
        ->capture_default_str();
    sweep_cmd->add_option("--seed-base", sweep.seed_base, "first seed")
        ->capture_default_str();
    sweep_cmd->add_flag("--artifacts", sweep.artifacts, "write per-seed bundles");
    sweep_cmd->add_option("--out-dir", sweep.out_dir, "output directory")
        ->capture_default_str();
    // smooth knobs (ignored by the piecewise pipeline)
    sweep_cmd->add_option("--d0", sweep.smooth.d0, "input dimension")
        ->capture_default_str();
    sweep_cmd->add_option("--n", sweep.smooth.n, "sample count")->capture_default_str();
    sweep_cmd->add_option("--widths", sweep.smooth.widths, "hidden widths")
        ->delimiter(',')
        ->capture_default_str();
    sweep_cmd->add_option("--dout", sweep.smooth.dout, "output dimension")
        ->capture_default_str();
    sweep_cmd->add_option("--alpha-scale", sweep.smooth.alpha, "dual coefficient scale")
        ->capture_default_str();
    sweep_cmd->add_option("--dist", sweep.smooth.dist, "normal|uniform")
        ->capture_default_str();
    add_act_options(sweep_cmd, sweep.smooth.act);
    add_cert_options(sweep_cmd, sweep.smooth.cert);
    sweep_cmd->add_flag("--baseline", sweep.smooth.baseline, "run the descent baseline");
    sweep_cmd->add_option("--radius-floor", sweep.smooth.radius_floor,
                          "demand an uncapped clean level at this radius when the "
                          "sign-preservation cap certifies below it")
        ->capture_default_str();
    add_config_file(sweep_cmd);

    std::string report_csv;
    CLI::App* report_cmd = app.add_subcommand("report", "aggregate a summary CSV");
    report_cmd->add_option("--csv", report_csv, "summary CSV path")->required();
    add_config_file(report_cmd);

    app.name(argc > 0 ? argv[0] : "minforge");
    std::vector<std::string> args(argv + std::min(argc, 1), argv + argc);
    try {
        expand_config_args(args);
    } catch (const forge_error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
        return rc_precondition;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return rc_precondition;
    }

    try {
        if (*gen_cmd) return cmd_gen_data(gen);
        if (*smooth_cmd) return cmd_forge_smooth(smooth);
        if (*sigmoid_cmd) return cmd_forge_sigmoid(sigmoid);
        if (*piecewise_cmd) return cmd_forge_piecewise(piecewise);
        if (*certify_cmd) return cmd_certify(certify);
        if (*witness_cmd) return cmd_witness(witness);
        if (*baseline_cmd) return cmd_train_baseline(baseline);
        if (*sweep_cmd) return cmd_sweep(sweep);
        if (*report_cmd) return cmd_report(report_csv);
    } catch (const forge_error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", e.code().c_str(), e.what());
        return precondition_code(e.code()) ? rc_precondition : rc_internal;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return rc_internal;
    }
    return rc_internal; // unreachable: a subcommand is required
}
