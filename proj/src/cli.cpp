#include "crowd/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowd/csv.hpp"
#include "crowd/dataset.hpp"
#include "crowd/error.hpp"
#include "crowd/figures.hpp"
#include "crowd/panel.hpp"
#include "crowd/random.hpp"
#include "crowd/resample.hpp"
#include "crowd/rules.hpp"
#include "crowd/synth.hpp"

namespace crowd::cli {

using nlohmann::json;

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fnv_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(stream_id(bytes)));
    return buf;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::Io, "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string resolve_output(const std::string& path) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    const char* dir = std::getenv("CROWD_OUTPUT_DIR");
    if (p.is_relative() && dir && *dir) p = std::filesystem::path(dir) / p;
    return p.string();
}

enum class Format { Csv, Json };

Format format_of(const std::string& path, Format fallback) {
    if (path.empty()) return fallback;
    const auto ext = csv::lower(std::filesystem::path(path).extension().string());
    if (ext == ".csv") return Format::Csv;
    if (ext == ".json") return Format::Json;
    throw Usage("output file must end in .csv or .json: " + path);
}

std::vector<int> parse_ns(const std::string& s) {
    std::vector<int> ns;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        int v = 0;
        if (!csv::parse_int(csv::trim(tok), v) || v < 1) throw Usage("bad crowd size '" + tok + "' in --ns");
        ns.push_back(v);
    }
    if (ns.empty()) throw Usage("--ns is empty");
    return ns;
}

json curve_json(const ErrorCurve& c) {
    json pts = json::array();
    for (const auto& p : c.points) pts.push_back({{"n", p.n}, {"mean_error", p.mean_error}, {"sem", p.sem}});
    return {{"question", c.question}, {"stage", stage_name(c.stage)}, {"mode", mode_name(c.mode)},
            {"iterations", c.iterations}, {"seed", c.seed}, {"points", pts}};
}

json wilcoxon_json(const WilcoxonResult& w) {
    return {{"statistic", w.statistic}, {"z", w.z}, {"p_two_sided", w.p_two_sided}, {"n", w.n}, {"exact", w.exact}};
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    Exec exec;
    json config = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
};

void emit(Context& ctx, const std::string& path, const std::string& content) {
    if (path.empty()) {
        ctx.out << content;
        return;
    }
    const std::string target = resolve_output(path);
    std::ofstream f(target, std::ios::binary);
    if (!f) throw Error(Errc::Io, "cannot write " + target);
    f << content;
    f.close();
    if (!f) throw Error(Errc::Io, "failed writing " + target);
    ctx.outputs.push_back(target);
}

void summary(Context& ctx, const std::string& path, const std::string& line) {
    (path.empty() ? ctx.err : ctx.out) << line << '\n';
}

std::vector<Question> questions_from(Context& ctx, const std::string& path) {
    ctx.inputs.push_back(path);
    return load_questions(path);
}

Dataset dataset_from(Context& ctx, const std::string& input, const std::string& qpath) {
    auto qs = questions_from(ctx, qpath);
    ctx.inputs.push_back(input);
    return parse_dataset(input, qs);
}

// --- subcommands -----------------------------------------------------------

struct Common {
    std::string input;
    std::string questions = CROWD_DATA_DIR "/questions.csv";
    std::string output;
    std::uint64_t seed = 0;
    CLI::Option* seed_opt = nullptr;
    int iterations = 1000;
};

void require_seed(const Common& c) {
    if (!c.seed_opt || c.seed_opt->count() == 0) throw Usage("--seed is required for stochastic commands");
}

void do_ingest(Context& ctx, const Common& c) {
    const auto ds = dataset_from(ctx, c.input, c.questions);
    const auto issues = validate_dataset(ds);
    const auto complete = complete_groups(ds);
    const Format fmt = format_of(c.output, Format::Csv);
    std::ostringstream os;
    if (fmt == Format::Csv) {
        write_dataset(os, ds);
    } else {
        json iss = json::array();
        for (const auto& i : issues) iss.push_back({{"kind", issue_name(i.kind)}, {"subject", i.subject}, {"detail", i.detail}});
        json cg = json::array();
        for (const auto& g : complete) cg.push_back(g.group_id);
        json j = {{"records", ds.records.size()},
                  {"groups", ds.groups.size()},
                  {"unaffiliated", ds.unaffiliated.size()},
                  {"complete_groups", cg},
                  {"issues", iss}};
        os << j.dump(2) << '\n';
    }
    emit(ctx, c.output, os.str());
    summary(ctx, c.output,
            "ingest: " + std::to_string(ds.records.size()) + " records, " + std::to_string(ds.groups.size()) +
                " groups, " + std::to_string(complete.size()) + " complete, " + std::to_string(issues.size()) +
                " issues");
}

struct SimArgs {
    int groups = 280;
    std::string model = CROWD_DATA_DIR "/default_model.json";
    std::optional<double> rho, beta, gamma, delta, noise_c, noise_r;
    bool control = false;
};

void do_simulate(Context& ctx, const Common& c, const SimArgs& s) {
    require_seed(c);
    if (s.groups < 1) throw Usage("--groups must be positive");
    auto qs = questions_from(ctx, c.questions);
    ctx.inputs.push_back(s.model);
    SynthConfig cfg = load_config(s.model);
    if (s.rho) cfg.rho = *s.rho;
    auto& d = cfg.deliberation;
    if (s.beta) d.beta = *s.beta;
    if (s.gamma) d.gamma = *s.gamma;
    if (s.delta) d.delta = *s.delta;
    if (s.noise_c) d.noise_c = *s.noise_c;
    if (s.noise_r) d.noise_r = *s.noise_r;
    if (s.control) d.beta = d.gamma = d.delta = 0.0;
    cfg = parse_config(config_json(cfg));  // re-validate overrides
    ctx.config["model"] = json::parse(config_json(cfg));

    const auto model = CrowdModel::from_questions(qs, cfg.rho);
    const auto ds = simulate(model, cfg.deliberation, s.groups, c.seed, ctx.exec);
    if (format_of(c.output, Format::Csv) != Format::Csv) throw Usage("simulate writes CSV");
    std::ostringstream os;
    write_dataset(os, ds);
    emit(ctx, c.output, os.str());
    summary(ctx, c.output,
            "simulate: " + std::to_string(s.groups) + " groups, " + std::to_string(ds.records.size()) +
                " records, seed " + std::to_string(c.seed));
}

struct CurveArgs {
    std::string mode = "within";
    std::string stage = "i1";
    std::string ns = "5,25,125";
    int combinations = 1000;
    bool all_questions = false;
    bool pooled = false;
};

void do_curves(Context& ctx, const Common& c, const CurveArgs& a) {
    require_seed(c);
    const auto mode = parse_mode(a.mode);
    const Stage stage = parse_stage(a.stage);
    const auto ns = parse_ns(a.ns);
    const auto ds = dataset_from(ctx, c.input, c.questions);
    PanelOptions po;
    po.discussed_only = !a.all_questions || stage == Stage::C;
    const auto panels = build_panels(ds, po);
    CurveOptions co;
    co.iterations = c.iterations;
    co.seed = c.seed;
    co.combinations = a.combinations;
    co.exec = ctx.exec;

    std::vector<ErrorCurve> curves;
    for (const auto& p : panels) curves.push_back(error_curve(p, stage, mode, ns, co));
    if (a.pooled && !curves.empty()) curves.push_back(pooled_curve(curves));

    std::ostringstream os;
    if (format_of(c.output, Format::Csv) == Format::Csv) {
        os << "question,stage,mode,n,mean_error,sem\n";
        for (const auto& cv : curves)
            for (const auto& p : cv.points)
                os << csv::quote(cv.question) << ',' << stage_name(cv.stage) << ',' << mode_name(cv.mode) << ','
                   << p.n << ',' << csv::format_double(p.mean_error) << ',' << csv::format_double(p.sem) << '\n';
    } else {
        json j = json::array();
        for (const auto& cv : curves) j.push_back(curve_json(cv));
        os << j.dump(2) << '\n';
    }
    emit(ctx, c.output, os.str());
    summary(ctx, c.output,
            "curves: " + std::to_string(curves.size()) + " curves x " + std::to_string(ns.size()) + " sizes, " +
                std::to_string(c.iterations) + " iterations, seed " + std::to_string(c.seed));
}

struct RuleArgs {
    int sample = 100;
    double epsilon = 1.0;
    double k = 4.0;
    bool grid = false;
};

void do_rules(Context& ctx, const Common& c, const RuleArgs& a) {
    require_seed(c);
    const auto ds = dataset_from(ctx, c.input, c.questions);
    const auto panels = build_panels(ds);
    RuleBenchOptions ro;
    ro.sample_size = a.sample;
    ro.iterations = c.iterations;
    ro.seed = c.seed;
    ro.exec = ctx.exec;
    for (auto& r : ro.rules) {
        r.epsilon = a.epsilon;
        r.k = a.k;
    }
    const auto res = rule_benchmark(panels, ro);
    json rules = json::object();
    for (const auto& r : res.rules) rules[r.name] = {{"mean_error", r.mean_error}, {"sem", r.sem}};
    json j = {{"sample_size", a.sample},
              {"iterations", c.iterations},
              {"seed", c.seed},
              {"epsilon", a.epsilon},
              {"k", a.k},
              {"consensus", {{"mean_error", res.consensus.mean_error}, {"sem", res.consensus.sem}}},
              {"rules", rules}};

    if (a.grid) {
        json eg = json::array(), kg = json::array();
        for (double eps : {0.1, 1.0, 10.0, 100.0, 1000.0}) {
            RuleBenchOptions g = ro;
            g.rules = {AggregationRule{RuleKind::ResistanceWeighted, eps}};
            const auto r = rule_benchmark(panels, g);
            eg.push_back({{"epsilon", eps}, {"mean_error", r.rules[0].mean_error}, {"sem", r.rules[0].sem}});
        }
        for (int k = 1; k <= 10; ++k) {
            RuleBenchOptions g = ro;
            AggregationRule rule;
            rule.kind = RuleKind::RobustAverage;
            rule.k = k;
            g.rules = {rule};
            const auto r = rule_benchmark(panels, g);
            kg.push_back({{"k", k}, {"mean_error", r.rules[0].mean_error}, {"sem", r.rules[0].sem}});
        }
        j["grid"] = {{"resistance_weighted", eg}, {"robust_average", kg}};
    }
    if (format_of(c.output, Format::Json) != Format::Json) throw Usage("rules-bench writes JSON");
    emit(ctx, c.output, j.dump(2) + "\n");

    std::string best = "consensus";
    double lo = res.consensus.mean_error;
    for (const auto& r : res.rules)
        if (r.mean_error < lo) lo = r.mean_error, best = r.name;
    summary(ctx, c.output, "rules-bench: " + std::to_string(res.rules.size()) + " rules, lowest error: " + best);
}

void do_stats(Context& ctx, const Common& c, int permutations) {
    require_seed(c);
    const auto ds = dataset_from(ctx, c.input, c.questions);
    const auto panels = build_panels(ds);
    const auto f = figure2(panels, c.seed, permutations, ctx.exec);
    json bias = json::array();
    for (const auto& b : f.bias)
        bias.push_back({{"question", b.question},
                        {"groups", b.groups},
                        {"consensus_bias", b.consensus_bias},
                        {"group_mean_bias", b.group_mean_bias},
                        {"wilcoxon", wilcoxon_json(b.test)}});
    json params = json::object();
    for (const auto& p : panels) params[p.question.code] = {{"median", p.params.median}, {"mad", p.params.mad}};
    json j = {{"seed", c.seed},
              {"params", params},
              {"bias", bias},
              {"distance", {{"to_consensus", f.distance_to_consensus},
                            {"to_group_mean", f.distance_to_mean},
                            {"wilcoxon", wilcoxon_json(f.distance_test)}}},
              {"within_variance", {{"i1", f.within.i1}, {"i2", f.within.i2}, {"wilcoxon", wilcoxon_json(f.within_test)}}},
              {"between_variance", {{"i1", f.between.i1},
                                    {"i2", f.between.i2},
                                    {"squared_rank", {{"statistic", f.between_test.statistic},
                                                      {"expected", f.between_test.expected},
                                                      {"p", f.between_test.p},
                                                      {"permutations", f.between_test.permutations}}}}}};
    if (format_of(c.output, Format::Json) != Format::Json) throw Usage("stats writes JSON");
    emit(ctx, c.output, j.dump(2) + "\n");
    summary(ctx, c.output, "stats: " + std::to_string(f.bias.size()) + " discussed questions, seed " + std::to_string(c.seed));
}

void do_reduce(Context& ctx, const Common& c, const std::string& ns_text, const std::string& set, int combinations) {
    require_seed(c);
    if (set != "discussed" && set != "undiscussed") throw Usage("--set must be discussed or undiscussed");
    const auto ns = parse_ns(ns_text);
    const auto ds = dataset_from(ctx, c.input, c.questions);
    PanelOptions po;
    po.discussed_only = false;
    std::vector<QuestionPanel> panels;
    for (auto& p : build_panels(ds, po))
        if (p.question.discussed == (set == "discussed")) panels.push_back(std::move(p));
    if (panels.empty()) throw Error(Errc::InsufficientData, "no " + set + " questions");
    CurveOptions co;
    co.iterations = c.iterations;
    co.seed = c.seed;
    co.combinations = combinations;
    co.exec = ctx.exec;
    const auto rows = reduction_table(panels, ns, co);
    std::ostringstream os;
    if (format_of(c.output, Format::Csv) == Format::Csv) {
        os << "n,error_i1,error_i2,reduction_percent\n";
        for (const auto& r : rows)
            os << r.n << ',' << csv::format_double(r.error_i1) << ',' << csv::format_double(r.error_i2) << ','
               << csv::format_double(r.reduction) << '\n';
    } else {
        json j = json::array();
        for (const auto& r : rows)
            j.push_back({{"n", r.n}, {"error_i1", r.error_i1}, {"error_i2", r.error_i2}, {"reduction_percent", r.reduction}});
        os << json{{"set", set}, {"seed", c.seed}, {"rows", j}}.dump(2) << '\n';
    }
    emit(ctx, c.output, os.str());
    summary(ctx, c.output, "reduce: " + std::to_string(rows.size()) + " sizes, " + set + " questions, seed " +
                               std::to_string(c.seed));
}

json digests(const std::vector<std::string>& paths) {
    json a = json::array();
    for (const auto& p : paths) a.push_back({{"path", p}, {"fnv1a64", digest_file(p)}});
    return a;
}

int do_replay(std::ostream& out, std::ostream& err, const std::string& manifest_path) {
    const json m = json::parse(read_file(manifest_path));
    std::vector<std::string> args = m.at("args").get<std::vector<std::string>>();
    std::ostringstream sink;
    const int rc = run(args, sink, err);
    if (rc != kOk) return rc;
    int mismatches = 0;
    for (const auto& o : m.at("outputs")) {
        const std::string path = o.at("path");
        const std::string want = o.at("fnv1a64");
        const std::string got = digest_file(path);
        if (got != want) {
            err << "crowd:error:DigestMismatch:" << path << " expected " << want << " got " << got << '\n';
            ++mismatches;
        }
    }
    if (mismatches) return kDataError;
    out << "replay: " << m.at("outputs").size() << " outputs reproduced\n";
    return kOk;
}

}  // namespace

std::string digest_file(const std::string& path) { return fnv_hex(read_file(path)); }

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Collective estimation toolkit: ingest, simulate and analyse three-stage crowd experiments", "crowd"};
    app.require_subcommand(1);
    int threads = 0;
    std::string manifest;
    app.add_option("--threads", threads, "Worker threads (0 = all); never changes results")->check(CLI::NonNegativeNumber);
    app.add_option("--manifest", manifest, "Write a reproducibility record (JSON) to this path");

    Common c;
    auto add_common = [&](CLI::App* sub, bool input, bool stochastic) {
        if (input) sub->add_option("--input,-i", c.input, "Dataset CSV")->required();
        sub->add_option("--questions", c.questions, "Question table CSV");
        sub->add_option("--output,-o", c.output, "Output file (.csv or .json)");
        if (stochastic) {
            c.seed_opt = sub->add_option("--seed", c.seed, "Random seed (required)");
            sub->add_option("--iterations", c.iterations, "Resampling iterations")->check(CLI::PositiveNumber);
        }
    };

    auto* ingest = app.add_subcommand("ingest", "Parse, validate and re-serialize a dataset");
    add_common(ingest, true, false);

    SimArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic three-stage dataset");
    add_common(simulate_cmd, false, false);
    c.seed_opt = nullptr;
    CLI::Option* sim_seed = simulate_cmd->add_option("--seed", c.seed, "Random seed (required)");
    simulate_cmd->add_option("--groups", sim.groups, "Number of five-player groups");
    simulate_cmd->add_option("--model", sim.model, "Model config JSON");
    simulate_cmd->add_option("--rho", sim.rho);
    simulate_cmd->add_option("--beta", sim.beta);
    simulate_cmd->add_option("--gamma", sim.gamma);
    simulate_cmd->add_option("--delta", sim.delta);
    simulate_cmd->add_option("--noise-c", sim.noise_c);
    simulate_cmd->add_option("--noise-r", sim.noise_r);
    simulate_cmd->add_flag("--control", sim.control, "Switch deliberation off (noise only)");

    CurveArgs ca;
    auto* curves = app.add_subcommand("curves", "Error-vs-crowd-size curves");
    add_common(curves, true, true);
    CLI::Option* curves_seed = c.seed_opt;
    curves->add_option("--mode", ca.mode, "within | between");
    curves->add_option("--stage", ca.stage, "i1 | c | i2");
    curves->add_option("--ns", ca.ns, "Comma-separated crowd sizes");
    curves->add_option("--combinations", ca.combinations, "Combinations per iteration")->check(CLI::PositiveNumber);
    curves->add_flag("--all-questions", ca.all_questions, "Include undiscussed questions (i1/i2 only)");
    curves->add_flag("--pooled", ca.pooled, "Append the curve averaged over questions");

    RuleArgs ra;
    auto* rules = app.add_subcommand("rules-bench", "Empirical consensus against the seven aggregation rules");
    add_common(rules, true, true);
    CLI::Option* rules_seed = c.seed_opt;
    rules->add_option("--sample", ra.sample, "Groups per iteration")->check(CLI::PositiveNumber);
    rules->add_option("--epsilon", ra.epsilon, "Resistance weighting epsilon");
    rules->add_option("--k", ra.k, "Robust average cutoff in decades");
    rules->add_flag("--grid", ra.grid, "Also scan epsilon and k");

    int permutations = kDefaultPermutations;
    auto* stats = app.add_subcommand("stats", "Bias, distance and variance statistics");
    add_common(stats, true, true);
    CLI::Option* stats_seed = c.seed_opt;
    stats->add_option("--permutations", permutations, "Squared-rank permutations")->check(CLI::PositiveNumber);

    std::string reduce_ns = "5,10,25,50,125,250";
    std::string reduce_set = "discussed";
    int reduce_comb = 1000;
    auto* reduce = app.add_subcommand("reduce", "Percent error reduction from i1 to i2");
    add_common(reduce, true, true);
    CLI::Option* reduce_seed = c.seed_opt;
    reduce->add_option("--ns", reduce_ns, "Comma-separated crowd sizes");
    reduce->add_option("--set", reduce_set, "discussed | undiscussed");
    reduce->add_option("--combinations", reduce_comb)->check(CLI::PositiveNumber);

    std::string replay_path;
    auto* replay = app.add_subcommand("replay", "Re-run a manifest and check output digests");
    replay->add_option("manifest", replay_path)->required();

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "crowd:error:Usage:" << e.what() << '\n';
        return kUsageError;
    }

    Context ctx{out, err, threads == 1 ? Exec::serial() : Exec{true, threads}};
    try {
        if (replay->parsed()) return do_replay(out, err, replay_path);

        std::string command;
        if (ingest->parsed()) command = "ingest", do_ingest(ctx, c);
        else if (simulate_cmd->parsed()) {
            command = "simulate";
            c.seed_opt = sim_seed;
            do_simulate(ctx, c, sim);
        } else if (curves->parsed()) {
            command = "curves";
            c.seed_opt = curves_seed;
            do_curves(ctx, c, ca);
        } else if (rules->parsed()) {
            command = "rules-bench";
            c.seed_opt = rules_seed;
            do_rules(ctx, c, ra);
        } else if (stats->parsed()) {
            command = "stats";
            c.seed_opt = stats_seed;
            do_stats(ctx, c, permutations);
        } else if (reduce->parsed()) {
            command = "reduce";
            c.seed_opt = reduce_seed;
            do_reduce(ctx, c, reduce_ns, reduce_set, reduce_comb);
        }

        if (!manifest.empty()) {
            // args minus --manifest (and --threads, which cannot change results)
            std::vector<std::string> replay_args;
            for (std::size_t i = 0; i < args.size(); ++i) {
                const std::string& a = args[i];
                if (a == "--manifest" || a == "--threads") {
                    ++i;
                    continue;
                }
                if (a.rfind("--manifest=", 0) == 0 || a.rfind("--threads=", 0) == 0) continue;
                replay_args.push_back(a);
            }
            json m = {{"tool", "crowd"},
                      {"command", command},
                      {"args", replay_args},
                      {"seed", c.seed},
                      {"iterations", c.iterations},
                      {"config", ctx.config},
                      {"inputs", digests(ctx.inputs)},
                      {"outputs", digests(ctx.outputs)}};
            const std::string target = resolve_output(manifest);
            std::ofstream f(target);
            if (!f) throw Error(Errc::Io, "cannot write " + target);
            f << m.dump(2) << '\n';
        }
    } catch (const Usage& e) {
        err << "crowd:error:Usage:" << e.what() << '\n';
        return kUsageError;
    } catch (const Error& e) {
        err << "crowd:error:" << errc_name(e.code()) << ':';
        if (e.line()) err << "line " << e.line() << ": ";
        err << e.what() << '\n';
        return e.code() == Errc::InvalidArgument ? kUsageError : kDataError;
    } catch (const json::exception& e) {
        err << "crowd:error:MalformedManifest:" << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        err << "crowd:error:Internal:" << e.what() << '\n';
        return kDataError;
    }
    return kOk;
}

}  // namespace crowd::cli
