// Command-line reproduction harness: meta/pole training, continual phases,
// pole-grid probes, statistical lemma checks, and gradient verification.
//
// Config resolution order: command defaults -> JSON config file -> flags.
// Exit codes: 0 success, 1 validation failure, 2 runtime/check failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qm2arl/analysis.hpp"
#include "qm2arl/envs.hpp"
#include "qm2arl/io.hpp"
#include "qm2arl/qnn.hpp"
#include "qm2arl/rng.hpp"
#include "qm2arl/train.hpp"

namespace {

using nlohmann::json;
using namespace qm2arl;

constexpr double kPi = 3.14159265358979323846;

struct RunConfig {
    std::string env = "twostep-main";
    int qubits = -1;  // -1 = environment default
    int depth = -1;   // -1 = environment default
    double beta = 8.0;
    double alpha_degrees = 0.0;
    std::string noise_mode = "all";  // all | polar
    int meta_epochs = 3000;
    int pole_epochs = 20000;
    int target_period = 50;
    double learning_rate = 1e-4;
    double pole_learning_rate = 0.0;  // 0 = follow learning_rate
    double weight_decay = 1e-5;
    double temperature = 1.0;
    double eps_start = 0.3;
    double eps_end = 0.01;
    double eps_anneal_frac = 0.5;
    bool strict_paper_mode = false;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    int trajectory_period = 1;
    std::string schedule = "twostep-a,twostep-b,twostep-a";
    long long samples = 200000;  // verify: Monte Carlo samples per case
    int verify_configs = 3;      // verify: random configs per alpha
    double tolerance = 1e-5;     // gradcheck: shift-vs-FD tolerance
    int gradcheck_configs = 100;
};

RunConfig defaults_for(const std::string& command) {
    RunConfig rc;
    if (command == "continual") {
        rc.meta_epochs = 5000;
        rc.pole_epochs = 10000;
    }
    return rc;
}

void apply_json_config(RunConfig& rc, const json& j) {
    if (!j.is_object()) throw std::invalid_argument("config: root must be a JSON object");
    try {
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            const json& v = it.value();
            if (k == "env") rc.env = v.get<std::string>();
            else if (k == "qubits") rc.qubits = v.get<int>();
            else if (k == "depth") rc.depth = v.get<int>();
            else if (k == "beta") rc.beta = v.get<double>();
            else if (k == "alpha_degrees") rc.alpha_degrees = v.get<double>();
            else if (k == "noise_mode") rc.noise_mode = v.get<std::string>();
            else if (k == "meta_epochs") rc.meta_epochs = v.get<int>();
            else if (k == "pole_epochs") rc.pole_epochs = v.get<int>();
            else if (k == "target_period") rc.target_period = v.get<int>();
            else if (k == "learning_rate") rc.learning_rate = v.get<double>();
            else if (k == "pole_learning_rate") rc.pole_learning_rate = v.get<double>();
            else if (k == "weight_decay") rc.weight_decay = v.get<double>();
            else if (k == "temperature") rc.temperature = v.get<double>();
            else if (k == "eps_start") rc.eps_start = v.get<double>();
            else if (k == "eps_end") rc.eps_end = v.get<double>();
            else if (k == "eps_anneal_frac") rc.eps_anneal_frac = v.get<double>();
            else if (k == "strict_paper_mode") rc.strict_paper_mode = v.get<bool>();
            else if (k == "seed") rc.seed = v.get<std::uint64_t>();
            else if (k == "output_dir") rc.output_dir = v.get<std::string>();
            else if (k == "trajectory_period") rc.trajectory_period = v.get<int>();
            else if (k == "schedule") rc.schedule = v.get<std::string>();
            else if (k == "samples") rc.samples = v.get<long long>();
            else if (k == "verify_configs") rc.verify_configs = v.get<int>();
            else if (k == "tolerance") rc.tolerance = v.get<double>();
            else if (k == "gradcheck_configs") rc.gradcheck_configs = v.get<int>();
            else throw std::invalid_argument("config: unknown key '" + k + "'");
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("config: bad value type: ") + e.what());
    }
}

json config_to_json(const RunConfig& rc) {
    json j;
    j["env"] = rc.env;
    j["qubits"] = rc.qubits;
    j["depth"] = rc.depth;
    j["beta"] = rc.beta;
    j["alpha_degrees"] = rc.alpha_degrees;
    j["noise_mode"] = rc.noise_mode;
    j["meta_epochs"] = rc.meta_epochs;
    j["pole_epochs"] = rc.pole_epochs;
    j["target_period"] = rc.target_period;
    j["learning_rate"] = rc.learning_rate;
    j["pole_learning_rate"] = rc.pole_learning_rate;
    j["weight_decay"] = rc.weight_decay;
    j["temperature"] = rc.temperature;
    j["eps_start"] = rc.eps_start;
    j["eps_end"] = rc.eps_end;
    j["eps_anneal_frac"] = rc.eps_anneal_frac;
    j["strict_paper_mode"] = rc.strict_paper_mode;
    j["seed"] = rc.seed;
    j["output_dir"] = rc.output_dir;
    j["trajectory_period"] = rc.trajectory_period;
    j["schedule"] = rc.schedule;
    j["samples"] = rc.samples;
    j["verify_configs"] = rc.verify_configs;
    j["tolerance"] = rc.tolerance;
    j["gradcheck_configs"] = rc.gradcheck_configs;
    return j;
}

void validate_run_config(const RunConfig& rc) {
    auto fail = [](const std::string& msg) { throw std::invalid_argument(msg); };
    if (rc.qubits != -1 && (rc.qubits < 1 || rc.qubits > 12)) fail("qubits: must be in [1, 12]");
    if (rc.depth < -1) fail("depth: must be >= 0 (-1 = environment default)");
    if (!(rc.beta > 0.0)) fail("beta: must be positive");
    if (rc.alpha_degrees < 0.0 || rc.alpha_degrees > 180.0) fail("alpha_degrees: must be in [0, 180]");
    if (rc.noise_mode != "all" && rc.noise_mode != "polar") fail("noise_mode: must be 'all' or 'polar'");
    if (rc.meta_epochs < 1) fail("meta_epochs: must be positive");
    if (rc.pole_epochs < 1) fail("pole_epochs: must be positive");
    if (rc.target_period < 1) fail("target_period: must be positive");
    if (!(rc.learning_rate > 0.0)) fail("learning_rate: must be positive");
    if (rc.pole_learning_rate < 0.0) fail("pole_learning_rate: must be >= 0 (0 = follow learning_rate)");
    if (rc.weight_decay < 0.0) fail("weight_decay: must be >= 0");
    if (!(rc.temperature > 0.0)) fail("temperature: must be positive");
    if (rc.eps_start < 0.0 || rc.eps_start > 1.0) fail("eps_start: must be in [0, 1]");
    if (rc.eps_end < 0.0 || rc.eps_end > 1.0) fail("eps_end: must be in [0, 1]");
    if (!(rc.eps_anneal_frac > 0.0) || rc.eps_anneal_frac > 1.0) fail("eps_anneal_frac: must be in (0, 1]");
    if (rc.output_dir.empty()) fail("output_dir: must not be empty");
    if (rc.trajectory_period < 1) fail("trajectory_period: must be positive");
    if (rc.samples < 2) fail("samples: must be at least 2");
    if (rc.verify_configs < 1) fail("verify_configs: must be positive");
    if (!(rc.tolerance > 0.0)) fail("tolerance: must be positive");
    if (rc.gradcheck_configs < 1) fail("gradcheck_configs: must be positive");
}

train::EnvKind parse_env_name(const std::string& name) {
    if (name == "twostep-main" || name == "main") return train::EnvKind::TwoStepMain;
    if (name == "twostep-a" || name == "env-a") return train::EnvKind::TwoStepA;
    if (name == "twostep-b" || name == "env-b") return train::EnvKind::TwoStepB;
    if (name == "singlehop" || name == "single-hop") return train::EnvKind::SingleHop;
    throw std::invalid_argument("env: unknown environment '" + name + "'");
}

std::vector<train::EnvKind> parse_schedule(const std::string& schedule) {
    std::vector<train::EnvKind> kinds;
    std::stringstream ss(schedule);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) kinds.push_back(parse_env_name(item));
    }
    if (kinds.empty()) throw std::invalid_argument("schedule: must name at least one environment");
    return kinds;
}

qnn::QnnConfig build_qnn_config(const RunConfig& rc, train::EnvKind kind) {
    qnn::QnnConfig cfg = train::is_twostep(kind) ? qnn::twostep_default_config()
                                                 : qnn::singlehop_default_config();
    if (rc.qubits != -1) cfg.num_qubits = rc.qubits;
    if (rc.depth != -1) cfg.depth = rc.depth;
    cfg.beta = rc.beta;
    cfg.validate();
    return cfg;
}

train::NoiseSpec build_noise(const RunConfig& rc) {
    train::NoiseSpec noise;
    noise.alpha = rc.alpha_degrees * kPi / 180.0;
    noise.mode = rc.noise_mode == "polar" ? train::NoiseMode::PolarOnly
                                          : train::NoiseMode::AllPoleCoords;
    return noise;
}

double pole_lr(const RunConfig& rc) {
    return rc.pole_learning_rate > 0.0 ? rc.pole_learning_rate : rc.learning_rate;
}

// The two pole coordinates reported per agent: one measured qubit -> its
// (polar, azimuth) pair; several -> polar angles of the first two qubits in
// action-map order (matches the grid probe's scan coordinates).
std::pair<int, int> trajectory_coords(const qnn::QnnConfig& cfg) {
    std::vector<int> qubits;
    for (const auto& set : cfg.action_qubits)
        for (int q : set)
            if (std::find(qubits.begin(), qubits.end(), q) == qubits.end()) qubits.push_back(q);
    if (qubits.size() == 1)
        return {qnn::pole_polar_index(qubits[0]), qnn::pole_azimuth_index(qubits[0])};
    return {qnn::pole_polar_index(qubits[0]), qnn::pole_polar_index(qubits[1])};
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

io::ModelFile load_model_checked(const std::string& path) {
    if (!io::file_exists(path)) throw std::invalid_argument("model: file not found: " + path);
    try {
        return io::read_model(path);
    } catch (const std::exception& e) {
        throw std::invalid_argument("model: cannot load " + path + ": " + e.what());
    }
}

train::PoleMemoryStore load_memory_checked(const std::string& path) {
    try {
        return io::read_pole_memory(path);
    } catch (const std::exception& e) {
        throw std::invalid_argument("memory: cannot load " + path + ": " + e.what());
    }
}

void write_manifest(const RunConfig& rc, const std::string& command,
                    const std::vector<std::string>& artifacts, const json& extra = {}) {
    json j;
    j["command"] = command;
    j["config"] = config_to_json(rc);
    j["artifacts"] = artifacts;
    if (!extra.is_null()) j["inputs"] = extra;
    io::atomic_write_text(join_path(rc.output_dir, "manifest.json"), j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_train_meta(const RunConfig& rc) {
    const train::EnvKind kind = parse_env_name(rc.env);
    const qnn::QnnConfig cfg = build_qnn_config(rc, kind);

    train::MetaConfig mc;
    mc.qnn = cfg;
    mc.envs = {kind};
    mc.epochs = rc.meta_epochs;
    mc.target_period = rc.target_period;
    mc.noise = build_noise(rc);
    mc.learning_rate = rc.learning_rate;
    mc.weight_decay = rc.weight_decay;
    mc.temperature = rc.temperature;
    mc.eps_start = rc.eps_start;
    mc.eps_end = rc.eps_end;
    mc.eps_anneal_frac = rc.eps_anneal_frac;
    mc.strict_paper_mode = rc.strict_paper_mode;
    mc.seed = rc.seed;

    std::cout << "train-meta: env=" << rc.env << " epochs=" << rc.meta_epochs
              << " alpha=" << rc.alpha_degrees << "deg seed=" << rc.seed << "\n";
    const train::MetaResult result = train::train_meta(mc);

    std::vector<std::vector<std::string>> loss_rows;
    loss_rows.reserve(result.loss_curve.size());
    for (std::size_t i = 0; i < result.loss_curve.size(); ++i)
        loss_rows.push_back({std::to_string(i + 1), io::format_double(result.loss_curve[i])});
    io::atomic_write_text(join_path(rc.output_dir, "loss.csv"),
                          io::csv_text("epoch,loss", loss_rows));

    std::vector<std::string> artifacts = {"loss.csv", "model.json", "model.mem", "manifest.json"};
    if (train::is_twostep(kind)) {
        const qnn::PoleParams zero(static_cast<std::size_t>(cfg.num_poles()), 0.0);
        const auto table = analysis::twostep_meta_qtable(cfg, result.phi, zero);
        std::vector<std::vector<std::string>> q_rows;
        const char* states[] = {"s1", "s2", "s3"};
        for (int s = 0; s < 3; ++s)
            for (int a = 0; a < 2; ++a)
                q_rows.push_back({states[s], std::to_string(a), io::format_double(table[s][a])});
        io::atomic_write_text(join_path(rc.output_dir, "qtable.csv"),
                              io::csv_text("state,action,q", q_rows));
        artifacts.insert(artifacts.begin() + 1, "qtable.csv");
    }

    io::ModelFile model;
    model.config = cfg;
    model.phi = result.phi;
    model.env_label = train::env_label(kind);
    model.seed = rc.seed;
    model.alpha_degrees = rc.alpha_degrees;
    model.epochs = rc.meta_epochs;
    io::write_model(join_path(rc.output_dir, "model.json"), model);

    const int n_agents = train::make_env(kind, cfg)->num_agents();
    train::PoleMemoryStore store;
    train::pole_memory_save(
        store, "meta",
        std::vector<qnn::PoleParams>(static_cast<std::size_t>(n_agents),
                                     qnn::PoleParams(static_cast<std::size_t>(cfg.num_poles()), 0.0)),
        train::env_label(kind), rc.meta_epochs, rc.alpha_degrees);
    io::write_pole_memory(join_path(rc.output_dir, "model.mem"), store);

    write_manifest(rc, "train-meta", artifacts);

    const std::size_t tail = std::max<std::size_t>(1, result.loss_curve.size() / 10);
    double tail_mean = 0.0;
    for (std::size_t i = result.loss_curve.size() - tail; i < result.loss_curve.size(); ++i)
        tail_mean += result.loss_curve[i];
    tail_mean /= static_cast<double>(tail);
    std::cout << "train-meta: mean loss over last 10% = " << tail_mean << "\n"
              << "train-meta: wrote artifacts to " << rc.output_dir << "\n";
    return 0;
}

int run_train_pole(const RunConfig& rc, const std::string& model_path) {
    const train::EnvKind kind = parse_env_name(rc.env);
    const io::ModelFile model = load_model_checked(model_path);

    train::PoleConfig pc;
    pc.qnn = model.config;  // the model owns the circuit shape
    pc.env = kind;
    pc.epochs = rc.pole_epochs;
    pc.target_period = rc.target_period;
    pc.learning_rate = pole_lr(rc);
    pc.weight_decay = rc.weight_decay;
    pc.temperature = rc.temperature;
    pc.eps_start = rc.eps_start;
    pc.eps_end = rc.eps_end;
    pc.eps_anneal_frac = rc.eps_anneal_frac;
    pc.strict_paper_mode = rc.strict_paper_mode;
    pc.record_distance = train::is_twostep(kind);
    pc.trajectory_period = rc.trajectory_period;
    pc.seed = rc.seed;

    std::cout << "train-pole: env=" << rc.env << " epochs=" << rc.pole_epochs
              << " lr=" << pc.learning_rate << " seed=" << rc.seed << "\n";
    const train::PoleResult result = train::train_pole(pc, model.phi);

    std::vector<std::vector<std::string>> ret_rows;
    ret_rows.reserve(result.return_curve.size());
    for (std::size_t i = 0; i < result.return_curve.size(); ++i) {
        std::vector<std::string> row = {std::to_string(i + 1),
                                        io::format_double(result.return_curve[i])};
        if (pc.record_distance) row.push_back(io::format_double(result.distance_curve[i]));
        ret_rows.push_back(std::move(row));
    }
    io::atomic_write_text(
        join_path(rc.output_dir, "return.csv"),
        io::csv_text(pc.record_distance ? "epoch,return,distance" : "epoch,return", ret_rows));

    const auto [c1, c2] = trajectory_coords(model.config);
    std::vector<std::vector<std::string>> traj_rows;
    for (const train::PoleSnapshot& snap : result.pole_trajectory)
        for (std::size_t n = 0; n < snap.poles.size(); ++n)
            traj_rows.push_back({std::to_string(snap.epoch), std::to_string(n),
                                 io::format_double(snap.poles[n][static_cast<std::size_t>(c1)]),
                                 io::format_double(snap.poles[n][static_cast<std::size_t>(c2)])});
    io::atomic_write_text(join_path(rc.output_dir, "pole_trajectory.csv"),
                          io::csv_text("epoch,agent,theta1,theta2", traj_rows));

    // Update the memory file sitting next to the input model, if any.
    train::PoleMemoryStore store;
    const std::string mem_in =
        (std::filesystem::path(model_path).parent_path() / "model.mem").string();
    if (io::file_exists(mem_in)) store = load_memory_checked(mem_in);
    train::pole_memory_save(store, train::env_label(kind), result.poles, train::env_label(kind),
                            rc.pole_epochs, rc.alpha_degrees);
    io::write_pole_memory(join_path(rc.output_dir, "model.mem"), store);

    json inputs;
    inputs["model"] = model_path;
    write_manifest(rc, "train-pole",
                   {"return.csv", "pole_trajectory.csv", "model.mem", "manifest.json"}, inputs);

    std::cout << "train-pole: final greedy return = " << result.return_curve.back() << "\n"
              << "train-pole: wrote artifacts to " << rc.output_dir << "\n";
    return 0;
}

int run_continual(const RunConfig& rc) {
    train::ContinualConfig cc;
    cc.schedule = parse_schedule(rc.schedule);
    cc.qnn = build_qnn_config(rc, cc.schedule.front());
    cc.meta_epochs = rc.meta_epochs;
    cc.pole_epochs = rc.pole_epochs;
    cc.noise = build_noise(rc);
    cc.meta_learning_rate = rc.learning_rate;
    cc.pole_learning_rate = pole_lr(rc);
    cc.weight_decay = rc.weight_decay;
    cc.target_period = rc.target_period;
    cc.temperature = rc.temperature;
    cc.eps_start = rc.eps_start;
    cc.eps_end = rc.eps_end;
    cc.eps_anneal_frac = rc.eps_anneal_frac;
    cc.strict_paper_mode = rc.strict_paper_mode;
    cc.seed = rc.seed;

    std::cout << "continual: schedule=" << rc.schedule << " meta=" << rc.meta_epochs
              << " pole=" << rc.pole_epochs << "/phase alpha=" << rc.alpha_degrees
              << "deg seed=" << rc.seed << "\n";

    cc.memory_enabled = true;
    const train::ContinualResult with_memory = train::fast_remember(cc);
    std::cout << "continual: memory arm done\n";
    cc.memory_enabled = false;
    const train::ContinualResult without_memory = train::fast_remember(cc);
    std::cout << "continual: no-memory arm done\n";

    std::vector<std::vector<std::string>> rows;
    auto append_arm = [&rows](const train::ContinualResult& res, int memory_flag) {
        for (std::size_t p = 0; p < res.phases.size(); ++p)
            for (std::size_t e = 0; e < res.phases[p].distance_curve.size(); ++e)
                rows.push_back({std::to_string(e + 1), std::to_string(p + 1),
                                io::format_double(res.phases[p].distance_curve[e]),
                                std::to_string(memory_flag)});
    };
    append_arm(with_memory, 1);
    append_arm(without_memory, 0);
    io::atomic_write_text(join_path(rc.output_dir, "distance.csv"),
                          io::csv_text("epoch,phase,distance,memory_enabled", rows));

    std::vector<std::vector<std::string>> loss_rows;
    for (std::size_t i = 0; i < with_memory.meta_loss_curve.size(); ++i)
        loss_rows.push_back({std::to_string(i + 1), io::format_double(with_memory.meta_loss_curve[i])});
    io::atomic_write_text(join_path(rc.output_dir, "loss.csv"),
                          io::csv_text("epoch,loss", loss_rows));

    io::ModelFile model;
    model.config = cc.qnn;
    model.phi = with_memory.phi;
    model.env_label = rc.schedule;
    model.seed = rc.seed;
    model.alpha_degrees = rc.alpha_degrees;
    model.epochs = rc.meta_epochs;
    io::write_model(join_path(rc.output_dir, "model.json"), model);
    io::write_pole_memory(join_path(rc.output_dir, "model.mem"), with_memory.memory);

    write_manifest(rc, "continual",
                   {"distance.csv", "loss.csv", "model.json", "model.mem", "manifest.json"});

    for (std::size_t p = 0; p < with_memory.phases.size(); ++p) {
        const auto& phase = with_memory.phases[p];
        std::cout << "continual: phase " << (p + 1) << " env=" << train::env_label(phase.env)
                  << " init=" << (phase.loaded_from_memory ? phase.init_label : "(continued)")
                  << " final distance=" << phase.distance_curve.back() << "\n";
    }
    std::cout << "continual: wrote artifacts to " << rc.output_dir << "\n";
    return 0;
}

int run_probe(const RunConfig& rc, const std::string& model_path, const std::string& state) {
    const io::ModelFile model = load_model_checked(model_path);

    envs::TwoStepState probe_state;
    if (state == "s1") probe_state = envs::TwoStepState::S1;
    else if (state == "s2") probe_state = envs::TwoStepState::S2;
    else if (state == "s3") probe_state = envs::TwoStepState::S3;
    else throw std::invalid_argument("state: unknown state label '" + state + "' (want s1|s2|s3)");

    const int step = probe_state == envs::TwoStepState::S1 ? 0 : 1;
    const qnn::Observation obs =
        envs::twostep_observation(probe_state, 0, step, model.config.num_qubits);
    const analysis::PoleGrid grid = analysis::pole_grid_probe(model.config, model.phi, obs, {}, state);

    std::vector<std::vector<std::string>> rows;
    rows.reserve(grid.axis_values.size() * grid.axis_values.size());
    for (std::size_t i = 0; i < grid.axis_values.size(); ++i)
        for (std::size_t j = 0; j < grid.axis_values.size(); ++j)
            rows.push_back({io::format_double(grid.axis_values[i]),
                            io::format_double(grid.axis_values[j]),
                            io::format_double(grid.values[i][j])});
    io::atomic_write_text(join_path(rc.output_dir, "polegrid.csv"),
                          io::csv_text("theta1,theta2,qmax", rows));

    json inputs;
    inputs["model"] = model_path;
    inputs["state"] = state;
    write_manifest(rc, "probe", {"polegrid.csv", "manifest.json"}, inputs);

    std::cout << "probe: state=" << state << " grid=" << grid.axis_values.size() << "x"
              << grid.axis_values.size() << " rows=" << rows.size() << "\n"
              << "probe: wrote artifacts to " << rc.output_dir << "\n";
    return 0;
}

int run_verify(const RunConfig& rc) {
    const double deg = kPi / 180.0;
    bool all_pass = true;
    std::vector<std::string> report_lines;
    auto record = [&](const std::string& line) {
        std::cout << line << "\n";
        report_lines.push_back(line);
    };

    // Noise-contraction check on the full two-step circuit.
    {
        const qnn::QnnConfig cfg = qnn::twostep_default_config();
        for (double alpha_deg : {30.0, 45.0, 60.0, 90.0}) {
            for (int c = 0; c < rc.verify_configs; ++c) {
                Rng rng(train::derive_seed(rc.seed, 100 + static_cast<std::uint64_t>(alpha_deg) * 10 +
                                                       static_cast<std::uint64_t>(c)));
                qnn::AngleParams phi(static_cast<std::size_t>(cfg.num_angles()));
                for (double& v : phi) v = rng.uniform(-kPi, kPi);
                qnn::PoleParams theta(static_cast<std::size_t>(cfg.num_poles()));
                for (double& v : theta) v = rng.uniform(-kPi, kPi);
                qnn::Observation o(static_cast<std::size_t>(cfg.num_qubits));
                for (double& v : o) v = rng.uniform(0.0, kPi);
                const int action = rng.integer(cfg.num_actions());

                const analysis::LemmaReport rep = analysis::lemma1_check(
                    cfg, phi, theta, alpha_deg * deg, o, action, rc.samples,
                    train::derive_seed(rc.seed, 500 + static_cast<std::uint64_t>(c)));
                const double factor = std::sin(rep.alpha) / rep.alpha;
                std::ostringstream line;
                line << "check=contraction alpha_degrees=" << alpha_deg << " factor=" << factor
                     << " estimate=" << rep.monte_carlo_estimate
                     << " prediction=" << rep.analytic_prediction
                     << " stderr=" << rep.standard_error << " samples=" << rep.sample_count
                     << " pass=" << (rep.pass ? 1 : 0);
                record(line.str());
                all_pass = all_pass && rep.pass;
            }
        }
    }

    // Gradient-variance bound on single-measured-qubit configs.
    {
        qnn::QnnConfig cfg;
        cfg.num_qubits = 2;
        cfg.depth = 2;
        cfg.beta = rc.beta;
        cfg.action_qubits = {{1}, {2}};
        cfg.validate();
        const long n3 = std::max<long long>(1000, rc.samples / 2);
        for (int c = 0; c < rc.verify_configs; ++c) {
            Rng rng(train::derive_seed(rc.seed, 700 + static_cast<std::uint64_t>(c)));
            qnn::AngleParams phi(static_cast<std::size_t>(cfg.num_angles()));
            for (double& v : phi) v = rng.uniform(-kPi, kPi);
            qnn::AngleParams phi_target(static_cast<std::size_t>(cfg.num_angles()));
            for (double& v : phi_target) v = rng.uniform(-kPi, kPi);
            qnn::PoleParams theta(static_cast<std::size_t>(cfg.num_poles()));
            for (double& v : theta) v = rng.uniform(-kPi, kPi);

            train::MetaEpisode episode(1);
            episode[0].obs.resize(static_cast<std::size_t>(cfg.num_qubits));
            episode[0].next_obs.resize(static_cast<std::size_t>(cfg.num_qubits));
            for (double& v : episode[0].obs) v = rng.uniform(0.0, kPi);
            for (double& v : episode[0].next_obs) v = rng.uniform(0.0, kPi);
            episode[0].action = rng.integer(cfg.num_actions());
            episode[0].reward = rng.uniform(-10.0, -8.0);
            episode[0].terminal = c % 2 == 1;
            episode[0].noise.assign(static_cast<std::size_t>(cfg.num_poles()), 0.0);
            const int k = rng.integer(cfg.num_angles());

            const analysis::Lemma3Report rep = analysis::lemma3_check(
                cfg, phi, phi_target, theta, 60.0 * deg, episode, k, n3,
                train::derive_seed(rc.seed, 900 + static_cast<std::uint64_t>(c)));
            std::ostringstream line;
            line << "check=variance-bound alpha_degrees=60 variance=" << rep.variance_estimate
                 << " bound=" << rep.bound << " stderr=" << rep.standard_error
                 << " samples=" << rep.sample_count << " pass=" << (rep.pass ? 1 : 0);
            record(line.str());
            all_pass = all_pass && rep.pass;
        }
    }

    std::string text;
    for (const std::string& line : report_lines) text += line + "\n";
    io::atomic_write_text(join_path(rc.output_dir, "lemma_reports.txt"), text);
    write_manifest(rc, "verify", {"lemma_reports.txt", "manifest.json"});

    std::cout << (all_pass ? "verify: PASS" : "verify: FAIL") << "\n";
    return all_pass ? 0 : 2;
}

int run_gradcheck(const RunConfig& rc, bool negate) {
    std::cout << "gradcheck: configs=" << rc.gradcheck_configs << " tolerance=" << rc.tolerance
              << (negate ? " (negated-analytic self-test)" : "") << "\n";
    const analysis::GradCheckReport rep =
        analysis::gradcheck_suite(rc.gradcheck_configs, rc.tolerance, rc.seed, negate);
    std::cout << "gradcheck: max angle deviation     = " << rep.max_angle_dev << "\n"
              << "gradcheck: max pole deviation      = " << rep.max_pole_dev << "\n"
              << "gradcheck: max meta-loss deviation = " << rep.max_meta_loss_dev
              << " (tolerance " << 10.0 * rc.tolerance << ")\n"
              << "gradcheck: max pole-loss deviation = " << rep.max_pole_loss_dev
              << " (tolerance " << 10.0 * rc.tolerance << ")\n"
              << (rep.pass ? "gradcheck: PASS" : "gradcheck: FAIL") << "\n";
    return rep.pass ? 0 : 2;
}

// ---------------------------------------------------------------------------
// Flag plumbing
// ---------------------------------------------------------------------------

struct SubState {
    CLI::App* cmd = nullptr;
    std::string name;
    std::string config_path;
    RunConfig flags;
    std::vector<std::function<void(RunConfig&)>> appliers;
    std::string model_path;
    std::string state;
    bool negate = false;
};

void register_common(SubState& st) {
    CLI::App* cmd = st.cmd;
    cmd->add_option("--config", st.config_path, "JSON config file (flags override file values)");
    auto add = [&st, cmd](const char* flag, auto RunConfig::*field, const char* desc) {
        auto* slot = &(st.flags.*field);
        CLI::Option* opt = cmd->add_option(flag, *slot, desc);
        st.appliers.push_back(
            [opt, slot, field](RunConfig& rc) { if (opt->count() > 0) rc.*field = *slot; });
    };
    add("--env", &RunConfig::env, "environment: twostep-main|twostep-a|twostep-b|singlehop");
    add("--seed", &RunConfig::seed, "base RNG seed");
    add("--out", &RunConfig::output_dir, "output directory");
    add("--alpha", &RunConfig::alpha_degrees, "pole-noise half-width in degrees [0, 180]");
    add("--qubits", &RunConfig::qubits, "encoding qubits (-1 = environment default)");
    add("--depth", &RunConfig::depth, "entangling layers (-1 = environment default)");
    add("--beta", &RunConfig::beta, "Q-value scale");
    add("--noise-mode", &RunConfig::noise_mode, "noise coordinates: all|polar");
    add("--meta-epochs", &RunConfig::meta_epochs, "circuit-angle training epochs");
    add("--pole-epochs", &RunConfig::pole_epochs, "pole training epochs (per phase for continual)");
    add("--target-period", &RunConfig::target_period, "target-network sync period");
    add("--learning-rate", &RunConfig::learning_rate, "Adam learning rate");
    add("--pole-learning-rate", &RunConfig::pole_learning_rate,
        "pole-phase learning rate (0 = follow learning-rate)");
    add("--weight-decay", &RunConfig::weight_decay, "decoupled weight decay");
    add("--temperature", &RunConfig::temperature, "softmax behavior temperature");
    add("--eps-start", &RunConfig::eps_start, "exploration floor at epoch 0");
    add("--eps-end", &RunConfig::eps_end, "exploration floor after annealing");
    add("--eps-anneal-frac", &RunConfig::eps_anneal_frac, "fraction of epochs spent annealing");
    add("--trajectory-period", &RunConfig::trajectory_period, "pole snapshot cadence");
    add("--schedule", &RunConfig::schedule, "comma-separated continual phase environments");
    add("--samples", &RunConfig::samples, "Monte Carlo samples per check");
    add("--verify-configs", &RunConfig::verify_configs, "random configurations per check");
    add("--tolerance", &RunConfig::tolerance, "shift-vs-FD tolerance (losses use 10x)");
    add("--configs", &RunConfig::gradcheck_configs, "gradient-check configurations");
    CLI::Option* strict = cmd->add_flag("--strict-paper-mode", st.flags.strict_paper_mode,
                                        "disable the exploration floor (pure softmax behavior)");
    st.appliers.push_back([strict, &st](RunConfig& rc) {
        if (strict->count() > 0) rc.strict_paper_mode = st.flags.strict_paper_mode;
    });
}

RunConfig resolve_config(const SubState& st) {
    RunConfig rc = defaults_for(st.name);
    if (!st.config_path.empty()) {
        json j;
        try {
            j = json::parse(io::read_text(st.config_path));
        } catch (const json::exception& e) {
            throw std::invalid_argument("config: cannot parse " + st.config_path + ": " + e.what());
        }
        apply_json_config(rc, j);
    }
    for (const auto& f : st.appliers) f(rc);
    validate_run_config(rc);
    return rc;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum multi-agent meta-RL simulator"};
    app.require_subcommand(1);

    std::deque<SubState> subs;
    auto make_sub = [&](const std::string& name, const std::string& desc) -> SubState& {
        subs.emplace_back();
        SubState& st = subs.back();
        st.cmd = app.add_subcommand(name, desc);
        st.name = name;
        register_common(st);
        return st;
    };

    SubState& meta = make_sub("train-meta", "train circuit angles under pole noise");
    SubState& pole = make_sub("train-pole", "train measurement poles with frozen angles");
    pole.cmd->add_option("--model", pole.model_path, "trained-angle model file")->required();
    SubState& cont = make_sub("continual", "phase schedule with and without pole memory");
    SubState& probe = make_sub("probe", "max-Q sweep over two pole coordinates");
    probe.cmd->add_option("--model", probe.model_path, "trained-angle model file")->required();
    probe.cmd->add_option("--state", probe.state, "probe state: s1|s2|s3")->required();
    SubState& verify = make_sub("verify", "statistical noise-contraction and variance-bound checks");
    SubState& gradcheck = make_sub("gradcheck", "shift-rule vs finite-difference sweep");
    gradcheck.cmd->add_flag("--negate", gradcheck.negate,
                            "flip analytic gradient signs (self-test, must fail)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (meta.cmd->parsed()) return run_train_meta(resolve_config(meta));
        if (pole.cmd->parsed()) return run_train_pole(resolve_config(pole), pole.model_path);
        if (cont.cmd->parsed()) return run_continual(resolve_config(cont));
        if (probe.cmd->parsed()) return run_probe(resolve_config(probe), probe.model_path, probe.state);
        if (verify.cmd->parsed()) return run_verify(resolve_config(verify));
        if (gradcheck.cmd->parsed()) return run_gradcheck(resolve_config(gradcheck), gradcheck.negate);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::length_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::out_of_range& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
