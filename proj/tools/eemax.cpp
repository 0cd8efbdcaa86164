// Batch front door: dataset generation, training, evaluation, oracle runs
// and the Rastrigin demonstration. Every subcommand materializes its
// resolved configuration into a key=value manifest next to its output
// before any long computation; feeding the manifest back through --config
// reproduces the run.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "eemax/chanmodel.hpp"
#include "eemax/inet.hpp"
#include "eemax/objective.hpp"
#include "eemax/oracle.hpp"
#include "eemax/trainer.hpp"

namespace {

constexpr const char* kVersion = "eemax 1.0.0";

double dbm_to_watts(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }
double dbw_to_watts(double dbw) { return std::pow(10.0, dbw / 10.0); }

struct PowerFlag {
    // NaN marks "not given" so manifests can materialize all three keys.
    double dbm = std::nan("");
    double dbw = std::nan("");
    double watts = std::nan("");

    void attach(CLI::App* cmd) {
        cmd->add_option("--pmax-dbm", dbm, "Maximum transmit power in dBm");
        cmd->add_option("--pmax-dbw", dbw, "Maximum transmit power in dBW");
        cmd->add_option("--pmax-w", watts, "Maximum transmit power in watts");
    }

    double resolve(double fallback_w) const {
        const int given = !std::isnan(dbm) + !std::isnan(dbw) + !std::isnan(watts);
        if (given > 1)
            throw std::invalid_argument("conflicting power unit flags: give only one of "
                                        "--pmax-dbm, --pmax-dbw, --pmax-w");
        if (!std::isnan(dbm)) return dbm_to_watts(dbm);
        if (!std::isnan(dbw)) return dbw_to_watts(dbw);
        if (!std::isnan(watts)) return watts;
        return fallback_w;
    }
};

void write_manifest(CLI::App* cmd, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write manifest " + path);
    out << "# " << kVersion << " subcommand=" << cmd->get_name() << "\n";
    out << "[" << cmd->get_name() << "]\n";
    out << cmd->config_to_str(true, false);
}

std::string csv_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_metrics_csv(const std::string& path, const std::vector<eemax::EpochMetrics>& metrics,
                       bool append) {
    const bool fresh = !append || !std::filesystem::exists(path);
    std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (fresh) out << "epoch,mean_ee_mbit_per_j,mean_entropy_nats,mean_penalty,kappa,s_watts\n";
    for (const auto& m : metrics)
        out << m.epoch << ',' << csv_double(m.mean_ee_mbit_per_j) << ','
            << csv_double(m.mean_entropy_nats) << ',' << csv_double(m.mean_penalty) << ','
            << csv_double(m.kappa) << ',' << csv_double(m.s_watts) << "\n";
}

struct OracleCsvRow {
    int64_t sample = 0;
    double ee_oracle = 0.0;
    std::vector<double> p_oracle;
};

void write_results_csv(const std::string& path, int64_t users,
                       const std::vector<OracleCsvRow>& oracle,
                       const eemax::EvalSummary* eval) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "sample_index,ee_oracle,ee_net,ratio";
    for (int64_t i = 0; i < users; ++i) out << ",p_oracle_" << i;
    for (int64_t i = 0; i < users; ++i) out << ",p_net_" << i;
    out << "\n";
    for (size_t k = 0; k < oracle.size(); ++k) {
        out << oracle[k].sample << ',' << csv_double(oracle[k].ee_oracle) << ',';
        if (eval) {
            out << csv_double(eval->ee[k]) << ',' << csv_double(eval->ee[k] / oracle[k].ee_oracle);
        } else {
            out << "nan,nan";
        }
        for (double p : oracle[k].p_oracle) out << ',' << csv_double(p);
        if (eval)
            for (double p : eval->powers[k]) out << ',' << csv_double(p);
        else
            for (int64_t i = 0; i < users; ++i) out << ",nan";
        out << "\n";
    }
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= line.size()) {
        const size_t comma = line.find(',', pos);
        if (comma == std::string::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    return out;
}

std::vector<OracleCsvRow> read_oracle_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open oracle results " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("sample_index,ee_oracle", 0) != 0)
        throw std::runtime_error("unexpected oracle CSV header in " + path);
    const std::vector<std::string> header = split_csv(line);
    std::vector<size_t> p_cols;
    for (size_t c = 0; c < header.size(); ++c)
        if (header[c].rfind("p_oracle_", 0) == 0) p_cols.push_back(c);

    std::vector<OracleCsvRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv(line);
        OracleCsvRow row;
        row.sample = std::stoll(cells.at(0));
        row.ee_oracle = std::stod(cells.at(1));
        for (size_t c : p_cols) row.p_oracle.push_back(std::stod(cells.at(c)));
        rows.push_back(std::move(row));
    }
    return rows;
}

// -- subcommands ---------------------------------------------------------------

int run_gen_data(int64_t users, int64_t bs, int64_t samples, uint64_t seed,
                 const std::string& out, const std::string& split, double p_max_w,
                 CLI::App* cmd) {
    eemax::ScenarioConfig cfg;
    cfg.num_users = users;
    cfg.num_bs = bs;
    if (bs == 1) cfg.bs_positions = {{1.0, 1.0}};
    cfg.p_max_w = p_max_w;
    cfg.rng_seed = seed;
    cfg.validate();
    write_manifest(cmd, out + ".manifest");
    eemax::Dataset ds = eemax::make_dataset(cfg, samples, split);
    eemax::save_dataset(ds, out);
    std::cout << "wrote " << samples << " samples of " << users << " users to " << out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data, test_data, out_dir;
    int64_t epochs = 5000;
    double lr = 1e-3;
    int64_t batch = 512;
    int64_t smc = 16;
    double h0 = std::nan("");
    double epsilon = 10.0;
    double delta_kappa = 1e-3;
    int64_t kappa_window = 50;
    double rho = 0.99;
    bool region_adapt = false;
    std::string optimizer = "adam";
    uint64_t seed = 1;
    int64_t layers = 5;
    int64_t dim = 20;
    bool resume = false;
    int64_t threads = 0;
};

int run_train(const TrainArgs& args, const PowerFlag& pmax, CLI::App* cmd) {
    namespace fs = std::filesystem;
    eemax::Dataset ds = eemax::load_dataset(args.data);
    if (ds.samples.empty()) throw std::runtime_error("training dataset is empty");

    eemax::TrainConfig cfg;
    cfg.learning_rate = args.lr;
    cfg.batch_size = args.batch;
    cfg.max_epochs = args.epochs;
    cfg.mc_samples = args.smc;
    cfg.epsilon = args.epsilon;
    cfg.delta_kappa = args.delta_kappa;
    cfg.kappa_window = args.kappa_window;
    cfg.entropy_stop = args.h0;
    cfg.region_rho = args.rho;
    cfg.region_adaptation = args.region_adapt;
    cfg.optimizer = args.optimizer == "sga" ? eemax::OptimizerKind::sga : eemax::OptimizerKind::adam;
    cfg.rng_seed = args.seed;
    cfg.num_layers = args.layers;
    cfg.feature_dim = args.dim;
    cfg.p_max_w = pmax.resolve(1.0);
    cfg.threads = args.threads;

    fs::create_directories(args.out_dir);
    write_manifest(cmd, (fs::path(args.out_dir) / "manifest.txt").string());

    const std::string state_path = (fs::path(args.out_dir) / "train_state.eemaxstate").string();
    eemax::TrainState resume_state;
    const eemax::TrainState* resume_ptr = nullptr;
    if (args.resume) {
        resume_state = eemax::load_train_state(state_path);
        resume_ptr = &resume_state;
        std::cout << "resuming after epoch " << resume_state.epochs_done << "\n";
    }

    eemax::TrainState final_state;
    eemax::TrainResult result = eemax::train(ds, cfg, resume_ptr, &final_state);

    write_metrics_csv((fs::path(args.out_dir) / "metrics.csv").string(), result.metrics,
                      args.resume);
    eemax::save_net(result.alpha, (fs::path(args.out_dir) / "alpha.eemaxnet").string());
    eemax::save_net(result.beta, (fs::path(args.out_dir) / "beta.eemaxnet").string());
    eemax::save_train_state(final_state, state_path);

    std::cout << "trained " << result.epochs_done << " epochs"
              << (result.stopped_by_entropy ? " (entropy stop)" : "") << ", final s = "
              << result.region.s << " W\n";
    if (!result.metrics.empty()) {
        const auto& last = result.metrics.back();
        std::cout << "final mean EE " << last.mean_ee_mbit_per_j << " Mbit/J, entropy "
                  << last.mean_entropy_nats << " nats, penalty " << last.mean_penalty << "\n";
    }

    if (!args.test_data.empty()) {
        eemax::Dataset test = eemax::load_dataset(args.test_data);
        eemax::EvalSummary summary = eemax::evaluate(result.alpha, test, result.region.s, cfg.mu,
                                                     cfg.p_c, cfg.bandwidth_hz);
        std::cout << "test mean EE " << summary.mean_ee << " Mbit/J over " << summary.ee.size()
                  << " samples\n";
    }
    return 0;
}

int run_eval(const std::string& checkpoint, const std::string& data, const std::string& oracle_csv,
             const std::string& out, double s_watts, CLI::App* cmd) {
    eemax::Dataset ds = eemax::load_dataset(data);
    eemax::NetParams alpha = eemax::load_net(checkpoint);
    if (!out.empty()) write_manifest(cmd, out + ".manifest");

    std::vector<OracleCsvRow> oracle;
    std::vector<double> oracle_ee;
    if (!oracle_csv.empty()) {
        oracle = read_oracle_csv(oracle_csv);
        if (oracle.size() != ds.samples.size())
            throw std::runtime_error("oracle results cover " + std::to_string(oracle.size()) +
                                     " samples, dataset has " + std::to_string(ds.samples.size()));
        for (const auto& row : oracle) oracle_ee.push_back(row.ee_oracle);
    }

    eemax::EvalSummary summary = eemax::evaluate(alpha, ds, s_watts, 4.0, 1.0, 180e3,
                                                 oracle_ee.empty() ? nullptr : &oracle_ee);
    std::cout << "mean EE " << summary.mean_ee << " Mbit/J over " << summary.ee.size()
              << " samples\n";
    if (!oracle_ee.empty())
        std::cout << "mean ratio to oracle " << summary.mean_ratio << ", ratio of means "
                  << summary.ratio_of_means << "\n";
    if (!out.empty()) {
        const int64_t users = ds.samples.front().gains.dim(0);
        if (oracle.empty()) {
            oracle.resize(ds.samples.size());
            for (size_t k = 0; k < oracle.size(); ++k) {
                oracle[k].sample = static_cast<int64_t>(k);
                oracle[k].ee_oracle = std::nan("");
                oracle[k].p_oracle.assign(static_cast<size_t>(users), std::nan(""));
            }
        } else {
            for (auto& row : oracle)
                if (row.p_oracle.empty()) row.p_oracle.assign(static_cast<size_t>(users), std::nan(""));
        }
        write_results_csv(out, users, oracle, &summary);
    }
    return 0;
}

int run_oracle(const std::string& data, const std::string& mode, int64_t grid_points,
               int64_t starts, uint64_t seed, const std::string& out, const PowerFlag& pmax,
               CLI::App* cmd) {
    eemax::Dataset ds = eemax::load_dataset(data);
    if (ds.samples.empty()) throw std::runtime_error("dataset is empty");
    const int64_t users = ds.samples.front().gains.dim(0);
    const double p_max = pmax.resolve(1.0);

    eemax::OracleConfig cfg;
    cfg.grid_points = grid_points > 0 ? grid_points : eemax::OracleConfig::default_grid_points(users);
    cfg.multistarts = starts;
    if (!out.empty()) write_manifest(cmd, out + ".manifest");

    std::vector<OracleCsvRow> rows;
    double mean_ee = 0.0;
    for (size_t k = 0; k < ds.samples.size(); ++k) {
        eemax::OracleResult res;
        if (mode == "grid") {
            res = eemax::grid_search(ds.samples[k], p_max, cfg);
        } else {
            eemax::Rng rng = eemax::Rng::stream(seed, 0xFACE, k);
            res = eemax::multistart(ds.samples[k], p_max, cfg.multistarts, cfg, rng);
        }
        OracleCsvRow row;
        row.sample = static_cast<int64_t>(k);
        row.ee_oracle = res.best_ee;
        row.p_oracle = res.best_p;
        rows.push_back(std::move(row));
        mean_ee += res.best_ee;
    }
    mean_ee /= static_cast<double>(rows.size());
    std::cout << "oracle mean EE " << mean_ee << " Mbit/J over " << rows.size() << " samples ("
              << mode << " mode)\n";
    if (!out.empty()) write_results_csv(out, users, rows, nullptr);
    return 0;
}

int run_rastrigin(int64_t n, const std::string& method, int64_t iterations, uint64_t seed,
                  const std::string& out, CLI::App* cmd) {
    eemax::RastriginConfig cfg;
    cfg.dims = n;
    cfg.iterations = iterations;
    cfg.rng_seed = seed;
    if (!out.empty()) write_manifest(cmd, out + ".manifest");
    eemax::RastriginTrace trace = eemax::rastrigin_demo(cfg);

    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!out.empty()) {
        file.open(out);
        if (!file) throw std::runtime_error("cannot write " + out);
        os = &file;
    }
    const bool box = method == "box" || method == "both";
    const bool gd = method == "gd" || method == "both";
    *os << "iter";
    if (box) *os << ",f_box";
    if (gd) *os << ",f_gd";
    *os << "\n";
    const size_t rows = std::max(trace.f_box.size(), trace.f_gd.size());
    for (size_t k = 0; k < rows; ++k) {
        *os << (k + 1);
        if (box) *os << ',' << (k < trace.f_box.size() ? csv_double(trace.f_box[k]) : "");
        if (gd) *os << ',' << (k < trace.f_gd.size() ? csv_double(trace.f_gd[k]) : "");
        *os << "\n";
    }
    std::cerr << "final f: box " << trace.final_f_box << ", gd " << trace.final_f_gd << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-efficiency maximization for multi-cell uplink power control"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.option_defaults()->always_capture_default(true);
    app.set_config("--config", "", "Read options from a manifest or key=value file");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a channel gain dataset");
    int64_t users = 4, bs = 4, samples = 512;
    uint64_t gen_seed = 1;
    std::string gen_out = "dataset.eemax", split = "train";
    PowerFlag gen_pmax;
    gen->add_option("--users", users, "Number of users sharing the resource block")
        ->check(CLI::PositiveNumber);
    gen->add_option("--bs", bs, "Number of base stations (1 or 4)")->check(CLI::IsMember({1, 4}));
    gen->add_option("--samples", samples, "Number of channel realizations")
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "RNG seed");
    gen->add_option("--out", gen_out, "Output dataset path");
    gen->add_option("--split", split, "Split tag (train/test)");
    gen_pmax.attach(gen);

    // train
    auto* tr = app.add_subcommand("train", "Train the power-control networks");
    TrainArgs targs;
    PowerFlag train_pmax;
    tr->add_option("--data", targs.data, "Training dataset")->required();
    tr->add_option("--test-data", targs.test_data, "Held-out dataset evaluated after training");
    tr->add_option("--out-dir", targs.out_dir, "Output directory")->required();
    tr->add_option("--epochs", targs.epochs, "Epoch cap")->check(CLI::NonNegativeNumber);
    tr->add_option("--lr", targs.lr, "Learning rate");
    tr->add_option("--batch", targs.batch, "Batch size")->check(CLI::PositiveNumber);
    tr->add_option("--smc", targs.smc, "Monte-Carlo draws per sample")->check(CLI::PositiveNumber);
    tr->add_option("--h0", targs.h0, "Entropy stop threshold in nats (default I*ln(10*ell_min))");
    tr->add_option("--epsilon", targs.epsilon, "Penalty weight");
    tr->add_option("--delta-kappa", targs.delta_kappa, "Entropy coefficient step");
    tr->add_option("--kappa-window", targs.kappa_window, "Entropy window h");
    tr->add_option("--rho", targs.rho, "Region shrink factor");
    tr->add_flag("--region-adapt", targs.region_adapt, "Enable feasible-region adaptation");
    tr->add_option("--optimizer", targs.optimizer, "adam or sga")
        ->check(CLI::IsMember({"adam", "sga"}));
    tr->add_option("--seed", targs.seed, "RNG seed");
    tr->add_option("--layers", targs.layers, "Network depth L");
    tr->add_option("--dim", targs.dim, "Feature width per category");
    tr->add_flag("--resume", targs.resume, "Continue from the saved training state");
    tr->add_option("--threads", targs.threads, "Worker threads (0 = hardware)");
    train_pmax.attach(tr);

    // eval
    auto* ev = app.add_subcommand("eval", "Evaluate a trained checkpoint");
    std::string ckpt, ev_data, ev_oracle, ev_out;
    double s_watts = 1.0;
    ev->add_option("--checkpoint", ckpt, "alpha checkpoint (.eemaxnet)")->required();
    ev->add_option("--data", ev_data, "Dataset to evaluate")->required();
    ev->add_option("--oracle", ev_oracle, "Oracle results CSV for ratio reporting");
    ev->add_option("--out", ev_out, "Write joined results CSV here");
    ev->add_option("--s-watts", s_watts, "Feasible-region scale in watts");

    // oracle
    auto* orc = app.add_subcommand("oracle", "Grid or multistart optimization per sample");
    std::string orc_data, orc_mode = "grid", orc_out;
    int64_t grid_points = 0, starts = 64;
    uint64_t orc_seed = 1;
    PowerFlag orc_pmax;
    orc->add_option("--data", orc_data, "Dataset")->required();
    orc->add_option("--mode", orc_mode, "grid or multistart")
        ->check(CLI::IsMember({"grid", "multistart"}));
    orc->add_option("--grid-points", grid_points, "Grid points per dimension (0 = default)");
    orc->add_option("--starts", starts, "Multistart count");
    orc->add_option("--seed", orc_seed, "Multistart RNG seed");
    orc->add_option("--out", orc_out, "Results CSV path");
    orc_pmax.attach(orc);

    // rastrigin
    auto* ras = app.add_subcommand("rastrigin", "Box method vs gradient descent on Rastrigin");
    int64_t ras_n = 10, ras_iters = 400000;
    std::string ras_method = "both", ras_out;
    uint64_t ras_seed = 1;
    ras->add_option("--n", ras_n, "Dimensions")->check(CLI::PositiveNumber);
    ras->add_option("--method", ras_method, "box, gd or both")
        ->check(CLI::IsMember({"box", "gd", "both"}));
    ras->add_option("--iters", ras_iters, "Iteration cap");
    ras->add_option("--seed", ras_seed, "RNG seed");
    ras->add_option("--out", ras_out, "Trace CSV path (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed())
            return run_gen_data(users, bs, samples, gen_seed, gen_out, split,
                                gen_pmax.resolve(1.0), gen);
        if (tr->parsed()) return run_train(targs, train_pmax, tr);
        if (ev->parsed()) return run_eval(ckpt, ev_data, ev_oracle, ev_out, s_watts, ev);
        if (orc->parsed())
            return run_oracle(orc_data, orc_mode, grid_points, starts, orc_seed, orc_out, orc_pmax,
                              orc);
        if (ras->parsed()) return run_rastrigin(ras_n, ras_method, ras_iters, ras_seed, ras_out, ras);
    } catch (const eemax::NanLossError& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
