// Command line front end for the federated hyperbolic SVM simulator.
//
// Subcommands:
//   synth          generate a synthetic dataset (CSV plus JSON sidecar)
//   run            run a federated experiment, emit JSONL records
//   sweep          run a parameter sweep, emit a long-format CSV
//   hull-stats     hull complexity against sample size, log-log slope
//   inspect-share  decode and verify a recorded message transcript
//
// Exit codes: 0 success, 1 internal failure, 2 bad user input.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hypfed/federation.hpp"

namespace {

using hypfed::u64;

u64 parse_u64(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(text, &used);
        if (used != text.size()) throw std::invalid_argument("trailing characters");
        return static_cast<u64>(v);
    } catch (const std::exception&) {
        throw hypfed::InvalidInputError(what + ": expected an unsigned integer, got '" + text + "'");
    }
}

// Seed precedence: --seed flag, then HYPFED_SEED, then the default.
u64 resolve_seed(const CLI::Option* seed_opt, u64 flag_value, u64 fallback) {
    if (seed_opt != nullptr && seed_opt->count() > 0) return flag_value;
    if (const char* env = std::getenv("HYPFED_SEED")) return parse_u64(env, "HYPFED_SEED");
    return fallback;
}

std::ostream& open_or_stdout(const std::string& path, std::ofstream& file) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw hypfed::InvalidInputError("cannot open output file " + path);
    return file;
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw hypfed::ParseError("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw hypfed::ParseError(path + ": " + e.what());
    }
}

struct RunFlags {
    std::string config_path;
    hypfed::RunConfig cfg;
    std::string out_path;
    std::string transcript_path;
    bool no_label_switching = false;
    std::string baselines_csv;

    CLI::Option* o_L = nullptr;
    CLI::Option* o_J = nullptr;
    CLI::Option* o_eps = nullptr;
    CLI::Option* o_lambda = nullptr;
    CLI::Option* o_h = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_trials = nullptr;
    CLI::Option* o_train_frac = nullptr;
    CLI::Option* o_grid_mode = nullptr;
    CLI::Option* o_ea_theta = nullptr;
    CLI::Option* o_ea_rh = nullptr;
    CLI::Option* o_dataset = nullptr;
    CLI::Option* o_jobs = nullptr;
    CLI::Option* o_n = nullptr;
    CLI::Option* o_r = nullptr;
    CLI::Option* o_k = nullptr;
    CLI::Option* o_mu = nullptr;
    CLI::Option* o_gamma = nullptr;
};

// Registers the shared run/sweep options on a subcommand. Flag values are
// parsed into a scratch config; resolve_run_config() later merges them over
// the config file so that flags always win.
void add_run_options(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON config file");
    f.o_L = cmd->add_option("--clients,-L", f.cfg.L, "number of clients");
    f.o_J = cmd->add_option("--classes,-J", f.cfg.J, "number of classes");
    f.o_eps = cmd->add_option("--epsilon", f.cfg.epsilon, "quantization distance margin");
    f.o_lambda = cmd->add_option("--lambda", f.cfg.lambda, "SVM regularization weight");
    f.o_h = cmd->add_option("--bh-order", f.cfg.h, "B_h sequence order (0 = automatic)");
    f.o_seed = cmd->add_option("--seed", f.cfg.seed, "master seed (HYPFED_SEED honored when absent)");
    f.o_trials = cmd->add_option("--trials", f.cfg.trials, "number of independent trials");
    f.o_train_frac = cmd->add_option("--train-frac", f.cfg.train_frac, "training fraction of each split");
    f.o_grid_mode = cmd->add_option("--grid-mode", f.cfg.grid_mode, "grid mode: distance or equal-area");
    f.o_ea_theta = cmd->add_option("--ea-theta", f.cfg.ea_theta, "equal-area grid: angular bins");
    f.o_ea_rh = cmd->add_option("--ea-rh", f.cfg.ea_rh, "equal-area grid: radial bins");
    f.o_dataset = cmd->add_option("--dataset", f.cfg.dataset_path, "CSV dataset to load instead of synthesizing");
    f.o_jobs = cmd->add_option("--jobs", f.cfg.jobs, "worker threads for trials");
    f.o_n = cmd->add_option("--n", f.cfg.synth.N, "synthetic sample count");
    f.o_r = cmd->add_option("--r", f.cfg.synth.R, "synthetic domain radius");
    f.o_k = cmd->add_option("--k", f.cfg.synth.k, "curvature magnitude");
    f.o_mu = cmd->add_option("--mu", f.cfg.synth.mu, "reference point radial position");
    f.o_gamma = cmd->add_option("--gamma", f.cfg.synth.gamma, "synthetic margin half-width");
    cmd->add_option("--baselines", f.baselines_csv, "comma separated baselines (FLP,FLE,CP,CE,CH-CP,CH-CE)");
    cmd->add_flag("--no-label-switching", f.no_label_switching, "disable simulated label switching");
}

hypfed::RunConfig resolve_run_config(const RunFlags& f) {
    hypfed::RunConfig cfg;
    if (!f.config_path.empty()) cfg = hypfed::config_from_json(load_json_file(f.config_path));
    auto take = [](const CLI::Option* o, auto& dst, const auto& src) {
        if (o != nullptr && o->count() > 0) dst = src;
    };
    take(f.o_L, cfg.L, f.cfg.L);
    take(f.o_J, cfg.J, f.cfg.J);
    take(f.o_eps, cfg.epsilon, f.cfg.epsilon);
    take(f.o_lambda, cfg.lambda, f.cfg.lambda);
    take(f.o_h, cfg.h, f.cfg.h);
    take(f.o_trials, cfg.trials, f.cfg.trials);
    take(f.o_train_frac, cfg.train_frac, f.cfg.train_frac);
    take(f.o_grid_mode, cfg.grid_mode, f.cfg.grid_mode);
    take(f.o_ea_theta, cfg.ea_theta, f.cfg.ea_theta);
    take(f.o_ea_rh, cfg.ea_rh, f.cfg.ea_rh);
    take(f.o_dataset, cfg.dataset_path, f.cfg.dataset_path);
    take(f.o_jobs, cfg.jobs, f.cfg.jobs);
    take(f.o_n, cfg.synth.N, f.cfg.synth.N);
    take(f.o_r, cfg.synth.R, f.cfg.synth.R);
    take(f.o_k, cfg.synth.k, f.cfg.synth.k);
    take(f.o_mu, cfg.synth.mu, f.cfg.synth.mu);
    take(f.o_gamma, cfg.synth.gamma, f.cfg.synth.gamma);
    cfg.seed = resolve_seed(f.o_seed, f.cfg.seed, cfg.seed);
    if (f.no_label_switching) cfg.label_switching = false;
    if (!f.baselines_csv.empty()) {
        cfg.baselines.clear();
        std::stringstream ss(f.baselines_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cfg.baselines.push_back(item);
        }
    }
    for (const std::string& b : cfg.baselines) {
        if (b != "FLP" && b != "FLE" && b != "CP" && b != "CE" && b != "CH-CP" && b != "CH-CE") {
            throw hypfed::InvalidInputError("unknown baseline '" + b + "'");
        }
    }
    if (cfg.grid_mode != "distance" && cfg.grid_mode != "equal-area") {
        throw hypfed::InvalidInputError("unknown grid mode '" + cfg.grid_mode + "'");
    }
    return cfg;
}

void emit_run_records(std::ostream& out, const hypfed::ExperimentResult& res, const hypfed::RunConfig& cfg) {
    nlohmann::json head;
    head["record"] = "config";
    head["config"] = hypfed::config_to_json(cfg);
    out << head.dump() << "\n";
    for (const hypfed::TrialRecord& rec : res.trials) {
        out << hypfed::trial_to_json(rec, cfg).dump() << "\n";
    }
    out << hypfed::summary_to_json(res, cfg).dump() << "\n";
}

void print_summary(std::ostream& out, const hypfed::ExperimentResult& res) {
    int failed = 0;
    for (const hypfed::TrialRecord& rec : res.trials) {
        if (!rec.fl_ok) {
            ++failed;
            out << "trial " << rec.trial << " failed: " << rec.fl_error << "\n";
        }
    }
    out << "baseline   accuracy    ci95        trials\n";
    for (const auto& [name, mc] : res.summary) {
        char line[128];
        std::snprintf(line, sizeof(line), "%-10s %-11.4f %-11.4f %zu/%zu\n", name.c_str(), mc.first, mc.second,
                      res.trials.size() - static_cast<std::size_t>(failed), res.trials.size());
        out << line;
    }
}

int cmd_run(const RunFlags& flags) {
    const hypfed::RunConfig cfg = resolve_run_config(flags);
    const hypfed::ExperimentResult res = hypfed::run_experiment(cfg);
    std::ofstream file;
    std::ostream& out = open_or_stdout(flags.out_path, file);
    emit_run_records(out, res, cfg);
    if (!flags.transcript_path.empty()) {
        std::ofstream tf(flags.transcript_path);
        if (!tf) throw hypfed::InvalidInputError("cannot open transcript file " + flags.transcript_path);
        tf << res.first_transcript.dump(2) << "\n";
    }
    print_summary(std::cerr, res);
    bool any_ok = res.trials.empty();
    for (const hypfed::TrialRecord& rec : res.trials) any_ok = any_ok || rec.fl_ok;
    if (!any_ok) {
        std::cerr << "every trial failed\n";
        return 1;
    }
    return 0;
}

int cmd_sweep(const RunFlags& flags, const std::string& param, const std::string& values_csv,
              const std::string& out_path) {
    std::vector<std::string> values;
    {
        std::stringstream ss(values_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) values.push_back(item);
        }
    }
    if (values.empty()) throw hypfed::InvalidInputError("sweep: --values must list at least one value");

    const hypfed::RunConfig base = resolve_run_config(flags);
    std::ofstream file;
    std::ostream& out = open_or_stdout(out_path, file);
    out << "param,baseline,trial,accuracy,avg_hull,max_hull,bits\n";

    for (const std::string& value : values) {
        hypfed::RunConfig cfg = base;
        try {
            if (param == "epsilon") {
                cfg.epsilon = std::stod(value);
            } else if (param == "lambda") {
                cfg.lambda = std::stod(value);
            } else if (param == "mu") {
                cfg.synth.mu = std::stod(value);
            } else if (param == "gamma") {
                cfg.synth.gamma = std::stod(value);
            } else if (param == "L") {
                cfg.L = std::stoi(value);
            } else if (param == "N") {
                cfg.synth.N = static_cast<std::size_t>(std::stoull(value));
            } else {
                throw hypfed::InvalidInputError("sweep: unknown parameter '" + param +
                                                "' (expected epsilon, lambda, mu, gamma, L or N)");
            }
        } catch (const std::invalid_argument&) {
            throw hypfed::InvalidInputError("sweep: cannot parse value '" + value + "' for " + param);
        } catch (const std::out_of_range&) {
            throw hypfed::InvalidInputError("sweep: value '" + value + "' out of range for " + param);
        }
        try {
            const hypfed::ExperimentResult res = hypfed::run_experiment(cfg);
            for (const hypfed::TrialRecord& rec : res.trials) {
                for (const auto& [name, acc] : rec.accuracy) {
                    out << value << ',' << name << ',' << rec.trial << ',' << acc << ',' << rec.avg_hull << ','
                        << rec.max_hull << ',' << rec.bits_per_client << "\n";
                }
            }
            std::cerr << param << "=" << value << " done\n";
        } catch (const hypfed::Error& e) {
            std::cerr << param << "=" << value << " failed: " << e.what() << "\n";
        }
    }
    return 0;
}

int cmd_hull_stats(const std::string& n_csv, double R, double k_mag, double epsilon, int trials, u64 seed,
                   const std::string& out_path) {
    std::vector<std::size_t> sizes;
    {
        std::stringstream ss(n_csv);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) sizes.push_back(parse_u64(item, "--n"));
        }
    }
    if (sizes.size() < 3) throw hypfed::InvalidInputError("hull-stats: need at least three sample sizes");
    if (trials < 1) throw hypfed::InvalidInputError("hull-stats: --trials must be positive");

    const hypfed::Curvature k(k_mag);
    const hypfed::QuantGrid grid = hypfed::build_grid(epsilon, R, k);

    nlohmann::json rows = nlohmann::json::array();
    std::vector<double> log_n, log_size;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        double mean_raw = 0.0;
        double mean_quant = 0.0;
        for (int t = 0; t < trials; ++t) {
            const u64 s = hypfed::derive_seed(seed, hypfed::seed_tag::data, (static_cast<u64>(i) << 32) | t);
            const std::vector<hypfed::DiscPoint> pts = hypfed::uniform_sample(sizes[i], R, k, s);
            mean_raw += static_cast<double>(hypfed::graham_scan(pts, k).size());
            mean_quant += static_cast<double>(hypfed::epsilon_minimal_hull(pts, grid, k).size());
        }
        mean_raw /= trials;
        mean_quant /= trials;
        rows.push_back({{"n", sizes[i]}, {"mean_hull", mean_quant}, {"mean_hull_raw", mean_raw}});
        log_n.push_back(std::log(static_cast<double>(sizes[i])));
        log_size.push_back(std::log(mean_quant));
    }

    const hypfed::stats::LinearFit fit = hypfed::stats::linear_regression(log_n, log_size);
    const double tq = hypfed::stats::student_t_quantile(0.975, static_cast<int>(sizes.size()) - 2);
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["R"] = R;
    j["k"] = k_mag;
    j["trials"] = trials;
    j["seed"] = seed;
    j["rows"] = rows;
    j["slope"] = fit.slope;
    j["intercept"] = fit.intercept;
    j["slope_stderr"] = fit.slope_stderr;
    j["slope_ci95"] = {fit.slope - tq * fit.slope_stderr, fit.slope + tq * fit.slope_stderr};

    std::ofstream file;
    std::ostream& out = open_or_stdout(out_path, file);
    out << j.dump(2) << "\n";
    return 0;
}

int cmd_inspect_share(const std::string& transcript_path, int client_filter) {
    const nlohmann::json tr = load_json_file(transcript_path);
    try {
        if (!tr.contains("shares") || tr.at("shares").empty()) {
            std::cout << "no shares\n";
            return 0;
        }
        const u64 q = tr.at("q").get<u64>();
        const int L = tr.at("L").get<int>();
        const int J = tr.at("J").get<int>();
        const int h = tr.at("h").get<int>();
        const int K_max = tr.at("K_max").get<int>();
        const std::vector<u64> elements = tr.at("sequence").get<std::vector<u64>>();
        const std::int64_t n_theta = tr.at("grid").at("N_theta").get<std::int64_t>();
        const std::int64_t n_rh = tr.at("grid").at("N_rh").get<std::int64_t>();
        const u64 B = static_cast<u64>(n_theta) * static_cast<u64>(n_rh);

        const hypfed::PrimeField field(q);
        hypfed::BhSequence seq;
        seq.h = h;
        seq.elements = elements;

        std::vector<hypfed::ScmaShare> shares;
        for (const nlohmann::json& sj : tr.at("shares")) {
            const std::vector<std::uint8_t> bytes = hypfed::detail::hex_decode(sj.at("hex").get<std::string>());
            hypfed::ScmaShare share = hypfed::deserialize_share(bytes);
            if (share.q != q) {
                throw hypfed::ParseError("share for client " + sj.at("client").dump() +
                                         " disagrees with the transcript field");
            }
            shares.push_back(std::move(share));
            if (client_filter == sj.at("client").get<int>()) {
                std::cout << "client " << client_filter << " share (" << shares.back().sums.size() << " sums):";
                const std::size_t show = std::min<std::size_t>(8, shares.back().sums.size());
                for (std::size_t i = 0; i < show; ++i) std::cout << ' ' << shares.back().sums[i];
                if (show < shares.back().sums.size()) std::cout << " ...";
                std::cout << "\n";
            }
        }
        if (static_cast<int>(shares.size()) != L) {
            throw hypfed::ParseError("transcript lists " + std::to_string(shares.size()) + " shares, expected " +
                                     std::to_string(L));
        }

        const hypfed::ScmaShare aggregate = hypfed::aggregate_shares(shares);
        if (tr.contains("aggregate_hex")) {
            const std::string expect = tr.at("aggregate_hex").get<std::string>();
            const std::string got = hypfed::detail::hex_encode(hypfed::serialize_share(aggregate));
            if (expect != got) throw hypfed::ParseError("recomputed aggregate disagrees with the transcript");
        }

        const std::map<u64, u64> decoded =
            hypfed::scma_decode(aggregate, field, B, static_cast<std::size_t>(L) * static_cast<std::size_t>(K_max));
        std::cout << "decoded " << decoded.size() << " occupied bins (q=" << q << ", n_sums=" << aggregate.sums.size()
                  << ")\n";
        std::map<std::pair<int, int>, std::vector<u64>> slot_bins;
        for (const auto& [bin, H] : decoded) {
            const std::vector<u64> parts = hypfed::bh_decompose(H, seq, h);
            std::cout << "bin " << bin << " sum " << H << " ->";
            for (u64 e : parts) {
                std::cout << ' ' << e;
                int pos = 0;
                for (std::size_t i = 0; i < elements.size(); ++i) {
                    if (elements[i] == e) pos = static_cast<int>(i) + 1;
                }
                slot_bins[{(pos - 1) / J, (pos - 1) % J}].push_back(bin);
            }
            std::cout << "\n";
        }

        if (tr.contains("truth")) {
            // Transcript truth is recorded per client; positions map clients to
            // the anonymous slots the decoder sees.
            bool all_ok = true;
            for (const nlohmann::json& cj : tr.at("truth")) {
                const int position = cj.at("position").get<int>();
                for (const nlohmann::json& sj : cj.at("slots")) {
                    const int slot = sj.at("slot").get<int>();
                    std::vector<u64> expect = sj.at("bins").get<std::vector<u64>>();
                    std::sort(expect.begin(), expect.end());
                    std::vector<u64> got = slot_bins[{position - 1, slot}];
                    std::sort(got.begin(), got.end());
                    if (expect != got) {
                        all_ok = false;
                        std::cout << "MISMATCH client " << cj.at("client") << " slot " << slot << "\n";
                    }
                }
            }
            if (!all_ok) throw hypfed::ParseError("transcript verification failed");
            std::cout << "verification: all client hulls recovered exactly\n";
        }
        return 0;
    } catch (const nlohmann::json::exception& e) {
        throw hypfed::ParseError(std::string("transcript: ") + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated SVM classification in the Poincare disc"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    hypfed::SynthSpec spec;
    std::string synth_out;
    synth->add_option("--n", spec.N, "sample count");
    synth->add_option("--r", spec.R, "domain radius");
    synth->add_option("--k", spec.k, "curvature magnitude");
    synth->add_option("--mu", spec.mu, "reference point radial position");
    synth->add_option("--gamma", spec.gamma, "margin half-width");
    CLI::Option* synth_seed = synth->add_option("--seed", spec.seed, "seed (HYPFED_SEED honored when absent)");
    synth->add_option("--out", synth_out, "output CSV path")->required();

    // run
    auto* run = app.add_subcommand("run", "run a federated experiment");
    RunFlags run_flags;
    add_run_options(run, run_flags);
    run->add_option("--out", run_flags.out_path, "JSONL output path (stdout when absent)");
    run->add_option("--transcript", run_flags.transcript_path, "write the first trial's message transcript here");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "sweep one parameter across values");
    RunFlags sweep_flags;
    std::string sweep_param, sweep_values, sweep_out;
    add_run_options(sweep, sweep_flags);
    sweep->add_option("--param", sweep_param, "parameter: epsilon, lambda, mu, gamma, L or N")->required();
    sweep->add_option("--values", sweep_values, "comma separated values")->required();
    sweep->add_option("--out", sweep_out, "CSV output path (stdout when absent)");

    // hull-stats
    auto* hs = app.add_subcommand("hull-stats", "quantized hull complexity against sample size");
    std::string hs_n = "1000,10000,100000";
    double hs_r = 0.95, hs_k = 1.0, hs_eps = 0.01;
    int hs_trials = 5;
    u64 hs_seed = 1;
    std::string hs_out;
    hs->add_option("--n", hs_n, "comma separated sample sizes");
    hs->add_option("--r", hs_r, "domain radius");
    hs->add_option("--k", hs_k, "curvature magnitude");
    hs->add_option("--epsilon", hs_eps, "quantization distance margin");
    hs->add_option("--trials", hs_trials, "trials per sample size");
    CLI::Option* hs_seed_opt = hs->add_option("--seed", hs_seed, "seed (HYPFED_SEED honored when absent)");
    hs->add_option("--out", hs_out, "JSON output path (stdout when absent)");

    // inspect-share
    auto* inspect = app.add_subcommand("inspect-share", "decode and verify a message transcript");
    std::string inspect_path;
    int inspect_client = 0;
    inspect->add_option("--transcript", inspect_path, "transcript JSON written by run --transcript")->required();
    inspect->add_option("--client", inspect_client, "print this client's share sums");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (synth->parsed()) {
            spec.seed = resolve_seed(synth_seed, spec.seed, spec.seed);
            const hypfed::SynthResult res = hypfed::synth_generate(spec);
            hypfed::save_dataset(synth_out, res.data);
            nlohmann::json echo;
            echo["config"] = {{"N", spec.N},       {"R", spec.R},         {"k", spec.k}, {"mu", spec.mu},
                              {"gamma", spec.gamma}, {"seed", spec.seed}};
            echo["written"] = synth_out;
            echo["points"] = res.data.points.size();
            std::map<std::string, std::size_t> class_counts;
            for (const hypfed::LabeledPoint& lp : res.data.points) ++class_counts[std::to_string(lp.y)];
            echo["class_counts"] = class_counts;
            std::cout << echo.dump() << "\n";
            return 0;
        }
        if (run->parsed()) return cmd_run(run_flags);
        if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_param, sweep_values, sweep_out);
        if (hs->parsed()) {
            const u64 seed = resolve_seed(hs_seed_opt, hs_seed, hs_seed);
            return cmd_hull_stats(hs_n, hs_r, hs_k, hs_eps, hs_trials, seed, hs_out);
        }
        if (inspect->parsed()) return cmd_inspect_share(inspect_path, inspect_client);
        std::cerr << "no subcommand selected\n";
        return 2;
    } catch (const hypfed::InternalError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const hypfed::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
}
