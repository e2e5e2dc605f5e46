// Command-line entry point: dataset generation, the two-stage training
// pipeline, offline/closed-loop evaluation, activation export, ablation.
//
// Exit codes: 0 success, 1 usage/config, 2 I/O, 3 contract violation
// (stage/shape/hash mismatch), 4 degenerate batch statistics.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "n2n/config.hpp"
#include "n2n/errors.hpp"
#include "n2n/evalharness.hpp"
#include "n2n/pipeline.hpp"
#include "n2n/sim/dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
    std::string config_path;
    int threads = 2;
    bool force = false;
};

n2n::Config load_cfg(const Common& c) {
    n2n::Config cfg = n2n::load_config(c.config_path);
    if (const char* env = std::getenv("N2N_SEED")) {
        cfg.seed = std::stoull(env);
    }
    return cfg;
}

void check_hash(const std::string& artifact, const std::string& artifact_hash,
                const std::string& expected, bool force) {
    if (artifact_hash != expected && !force) {
        throw n2n::ContractError("config hash mismatch for " + artifact + " (" + artifact_hash +
                                 " vs " + expected + "); pass --force to override");
    }
}

std::map<std::string, double> parse_mix(const std::string& spec) {
    std::map<std::string, double> mix;
    if (spec.empty()) {
        return mix;
    }
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw n2n::ConfigError("bad --mix entry (want name=fraction): " + item);
        }
        mix[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
    }
    return mix;
}

std::vector<uint64_t> parse_seeds(const std::string& spec) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            seeds.push_back(std::stoull(item));
        }
    }
    return seeds;
}

int cmd_gen_data(const Common& common, const std::string& out, int episodes, int64_t seed,
                 const std::string& mix_spec) {
    n2n::Config cfg = load_cfg(common);
    n2n::sim::DatasetConfig dc;
    dc.out_dir = out;
    dc.episode_count = episodes;
    dc.seed = seed >= 0 ? static_cast<uint64_t>(seed) : cfg.seed;
    dc.mix = parse_mix(mix_spec);
    dc.train_frac = cfg.sim.train_frac;
    dc.val_frac = cfg.sim.val_frac;
    dc.sim = n2n::sim_config(cfg);
    dc.threads = common.threads;
    dc.config_hash = n2n::compute_config_hash(cfg);
    const auto manifest = n2n::sim::make_dataset(dc);
    std::cout << "wrote " << manifest.episodes.size() << " episodes to " << out
              << " (dataset_hash " << manifest.dataset_hash << ")\n";
    return 0;
}

int cmd_train_teacher(const Common& common, const std::string& data, const std::string& out) {
    n2n::Config cfg = load_cfg(common);
    const auto manifest = n2n::sim::load_manifest(data);
    check_hash(data, manifest.config_hash, n2n::compute_config_hash(cfg), common.force);
    const auto ckpt = n2n::pipeline::train_teacher_ckpt(manifest, cfg, cfg.seed, common.threads);
    ckpt.save(out);
    std::cout << "teacher checkpoint -> " << out << " (final_train_loss "
              << ckpt.meta.metrics.at("final_train_loss") << ")\n";
    return 0;
}

int cmd_pretrain(const Common& common, const std::string& data, const std::string& teacher_path,
                 const std::string& out, bool no_text) {
    n2n::Config cfg = load_cfg(common);
    const auto manifest = n2n::sim::load_manifest(data);
    check_hash(data, manifest.config_hash, n2n::compute_config_hash(cfg), common.force);
    const auto teacher = n2n::Checkpoint::load(teacher_path);
    check_hash(teacher_path, teacher.meta.config_hash, n2n::compute_config_hash(cfg),
               common.force);
    if (!teacher.meta.dataset_hash.empty() && !common.force &&
        teacher.meta.dataset_hash != manifest.dataset_hash) {
        throw n2n::ContractError("teacher was trained on a different dataset; pass --force");
    }
    const auto ckpt = n2n::pipeline::pretrain_student_ckpt(manifest, teacher, cfg, cfg.seed,
                                                           no_text, common.threads);
    ckpt.save(out);
    std::cout << "pretrained checkpoint -> " << out << " (final_bt_loss "
              << ckpt.meta.metrics.at("final_bt_loss") << ")\n";
    return 0;
}

int cmd_finetune(const Common& common, const std::string& data, const std::string& ckpt_path,
                 const std::string& out) {
    n2n::Config cfg = load_cfg(common);
    const auto manifest = n2n::sim::load_manifest(data);
    check_hash(data, manifest.config_hash, n2n::compute_config_hash(cfg), common.force);
    const auto start = n2n::Checkpoint::load(ckpt_path);
    check_hash(ckpt_path, start.meta.config_hash, n2n::compute_config_hash(cfg), common.force);
    const auto ckpt =
        n2n::pipeline::finetune_student_ckpt(manifest, start, cfg, cfg.seed, common.threads);
    ckpt.save(out);
    std::cout << "policy checkpoint -> " << out << " (final_train_mse "
              << ckpt.meta.metrics.at("final_train_mse") << ")\n";
    return 0;
}

int cmd_init_student(const Common& common, const std::string& out) {
    n2n::Config cfg = load_cfg(common);
    const auto ckpt = n2n::pipeline::scratch_student_ckpt(cfg, cfg.seed);
    ckpt.save(out);
    std::cout << "scratch student checkpoint -> " << out << "\n";
    return 0;
}

int cmd_eval_offline(const Common& common, const std::string& data,
                     const std::vector<std::string>& ckpt_paths, const std::string& split,
                     const std::string& report_path) {
    n2n::Config cfg = load_cfg(common);
    const auto manifest = n2n::sim::load_manifest(data);
    std::vector<n2n::evalh::MetricsReport> reports;
    for (const auto& path : ckpt_paths) {
        const auto ckpt = n2n::Checkpoint::load(path);
        n2n::require_stage(ckpt, "policy");
        check_hash(path, ckpt.meta.config_hash, n2n::compute_config_hash(cfg), common.force);
        if (!ckpt.meta.dataset_hash.empty() && !common.force &&
            ckpt.meta.dataset_hash != manifest.dataset_hash) {
            throw n2n::ContractError("policy " + path +
                                     " was trained on a different dataset; pass --force");
        }
        auto student = n2n::pipeline::student_from_checkpoint(ckpt);
        std::string method = fs::path(path).stem().string();
        if (!ckpt.meta.variant.empty()) {
            method += "(" + ckpt.meta.variant + ")";
        }
        auto r = n2n::evalh::eval_offline(*student, manifest, split, method, common.threads);
        r.seed = ckpt.meta.seed;
        r.checkpoint_id = ckpt.meta.config_hash + ":" + ckpt.meta.stage + ":" +
                          std::to_string(ckpt.meta.seed);
        reports.push_back(std::move(r));
    }
    if (reports.size() == 1) {
        n2n::evalh::write_report_csv(reports.front(), report_path);
    } else {
        const auto table = n2n::evalh::compare_methods(reports);
        n2n::evalh::write_comparison_csv(table, report_path);
        std::cout << "improvement of " << table.designated_method << " over "
                  << table.best_other_method << ": " << table.improvement_pct << "%\n";
    }
    std::cout << "report -> " << report_path << "\n";
    return 0;
}

int cmd_eval_closedloop(const Common& common, const std::string& ckpt_path,
                        const std::string& scenario, int trials, int64_t seed0,
                        const std::string& report_path) {
    n2n::Config cfg = load_cfg(common);
    const auto ckpt = n2n::Checkpoint::load(ckpt_path);
    n2n::require_stage(ckpt, "policy");
    check_hash(ckpt_path, ckpt.meta.config_hash, n2n::compute_config_hash(cfg), common.force);
    auto student = n2n::pipeline::student_from_checkpoint(ckpt);
    const auto policy = n2n::pipeline::policy_from_student(*student);
    const auto sim_cfg = n2n::sim_config(cfg);
    const auto ctrl_cfg = n2n::controller_config(cfg);

    std::vector<std::string> kinds;
    if (scenario == "all") {
        for (auto k : n2n::sim::all_scenarios()) {
            kinds.push_back(n2n::sim::to_string(k));
        }
    } else {
        kinds.push_back(scenario);
    }

    std::string csv = "scenario,trial,seed,success,collisions,steps,final_goal_distance\n";
    for (const auto& kind_name : kinds) {
        const auto kind = n2n::sim::scenario_from_string(kind_name);
        int successes = 0;
        int collisions = 0;
        for (int trial = 0; trial < trials; ++trial) {
            const uint64_t seed = static_cast<uint64_t>(seed0) + static_cast<uint64_t>(trial);
            const auto result =
                n2n::control::rollout_closed_loop(policy, kind, seed, ctrl_cfg, sim_cfg);
            successes += result.success ? 1 : 0;
            collisions += result.collisions > 0 ? 1 : 0;
            std::ostringstream line;
            line.precision(17);
            line << kind_name << "," << trial << "," << seed << ","
                 << (result.success ? 1 : 0) << "," << result.collisions << "," << result.steps
                 << "," << result.final_goal_distance << "\n";
            csv += line.str();
        }
        csv += kind_name + "_summary,,,\"" + std::to_string(successes) + "/" +
               std::to_string(trials) + "\",\"" + std::to_string(collisions) + "/" +
               std::to_string(trials) + "\",,\n";
        std::cout << kind_name << ": success " << successes << "/" << trials << ", collision "
                  << collisions << "/" << trials << "\n";
    }
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw n2n::IoError("cannot write " + report_path);
    }
    out << csv;
    return 0;
}

int cmd_export_activations(const Common& common, const std::string& ckpt_path,
                           const std::string& data, int episode, int step,
                           const std::string& out_dir) {
    n2n::Config cfg = load_cfg(common);
    const auto ckpt = n2n::Checkpoint::load(ckpt_path);
    n2n::require_stage(ckpt, "policy");
    check_hash(ckpt_path, ckpt.meta.config_hash, n2n::compute_config_hash(cfg), common.force);
    auto student = n2n::pipeline::student_from_checkpoint(ckpt);
    const auto manifest = n2n::sim::load_manifest(data);
    if (episode < 0 || episode >= static_cast<int>(manifest.episodes.size())) {
        throw n2n::ContractError("episode index out of range");
    }
    const auto ep = n2n::sim::read_episode(
        (fs::path(data) / manifest.episodes[static_cast<size_t>(episode)].dir).string());
    const auto exported = n2n::evalh::export_activations(*student, ep, step);

    fs::create_directories(out_dir);
    for (size_t i = 0; i < exported.maps.size(); ++i) {
        n2n::evalh::write_pgm(exported.maps[i],
                              (fs::path(out_dir) / ("frame_" + std::to_string(i) + ".pgm"))
                                  .string());
    }
    json attn{{"episode", episode},
              {"step", step},
              {"ctx_attention", exported.ctx_attention}};
    std::ofstream sidecar(fs::path(out_dir) / "attention.json");
    sidecar << attn.dump(2) << "\n";
    std::cout << exported.maps.size() << " activation maps -> " << out_dir << "\n";
    return 0;
}

int cmd_ablate(const Common& common, const std::string& data, const std::string& seeds_spec,
               const std::string& report_path) {
    n2n::Config cfg = load_cfg(common);
    const auto manifest = n2n::sim::load_manifest(data);
    check_hash(data, manifest.config_hash, n2n::compute_config_hash(cfg), common.force);
    const auto seeds = parse_seeds(seeds_spec);
    const auto table =
        n2n::evalh::run_ablation_suite(manifest, seeds, cfg, common.threads, &std::cerr);
    n2n::evalh::write_comparison_csv(table, report_path);
    std::cout << "ablation table -> " << report_path << " (full vs no_pretrain improvement "
              << table.improvement_pct << "%)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "n2n: synthetic social-navigation distillation pipeline.\n"
        "Exit codes: 0 ok, 1 usage/config, 2 io, 3 contract, 4 degenerate-batch."};
    app.require_subcommand(1);

    Common common;
    app.add_option("--config", common.config_path, "JSON config file (defaults when omitted)");
    app.add_option("--threads", common.threads, "worker threads for data gen and eval");
    app.add_flag("--force", common.force, "skip config/dataset hash compatibility checks");

    // gen-data
    std::string out_dir, data_dir, mix_spec;
    int episodes = 10;
    int64_t seed_flag = -1;
    auto* gen = app.add_subcommand("gen-data", "generate a synthetic dataset");
    gen->add_option("--out", out_dir, "output dataset directory")->required();
    gen->add_option("--episodes", episodes, "episode count");
    gen->add_option("--seed", seed_flag, "dataset seed (default: config seed)");
    gen->add_option("--mix", mix_spec, "scenario mix, e.g. crowd=0.4,intersection=0.6");

    // train-teacher
    std::string ckpt_out, teacher_path, ckpt_path;
    auto* tt = app.add_subcommand("train-teacher", "stage-1 teacher training");
    tt->add_option("--data", data_dir, "dataset directory")->required();
    tt->add_option("--out", ckpt_out, "output checkpoint path")->required();

    // pretrain-student
    bool no_text = false;
    auto* ps = app.add_subcommand("pretrain-student", "stage-2 Barlow Twins pretraining");
    ps->add_option("--data", data_dir, "dataset directory")->required();
    ps->add_option("--teacher", teacher_path, "teacher checkpoint")->required();
    ps->add_option("--out", ckpt_out, "output checkpoint path")->required();
    ps->add_flag("--no-text", no_text, "feed the empty narration to the teacher (ablation)");

    // finetune-student
    auto* ft = app.add_subcommand("finetune-student", "supervised decoder fine-tuning");
    ft->add_option("--data", data_dir, "dataset directory")->required();
    ft->add_option("--ckpt", ckpt_path, "pretrained or scratch checkpoint")->required();
    ft->add_option("--out", ckpt_out, "output checkpoint path")->required();

    // init-student
    auto* init = app.add_subcommand("init-student", "random student checkpoint (BC baseline)");
    init->add_option("--out", ckpt_out, "output checkpoint path")->required();

    // eval-offline
    std::vector<std::string> ckpt_paths;
    std::string split = "test", report_path;
    auto* eo = app.add_subcommand("eval-offline", "offline AOE/ADE/FDE evaluation");
    eo->add_option("--data", data_dir, "dataset directory")->required();
    eo->add_option("--ckpt", ckpt_paths, "policy checkpoint (repeat to compare)")->required();
    eo->add_option("--split", split, "dataset split");
    eo->add_option("--report", report_path, "output CSV path")->required();

    // eval-closedloop
    std::string scenario = "frontal_approach";
    int trials = 10;
    int64_t trial_seed = 1000;
    auto* ec = app.add_subcommand("eval-closedloop", "closed-loop success/collision trials");
    ec->add_option("--ckpt", ckpt_path, "policy checkpoint")->required();
    ec->add_option("--scenario", scenario, "scenario name or 'all'");
    ec->add_option("--trials", trials, "trials per scenario");
    ec->add_option("--seed", trial_seed, "first trial seed");
    ec->add_option("--report", report_path, "output CSV path")->required();

    // export-activations
    int episode_idx = 0, step_idx = 0;
    auto* ea = app.add_subcommand("export-activations", "write PGM activation maps");
    ea->add_option("--ckpt", ckpt_path, "policy checkpoint")->required();
    ea->add_option("--data", data_dir, "dataset directory")->required();
    ea->add_option("--episode", episode_idx, "episode index");
    ea->add_option("--step", step_idx, "step index");
    ea->add_option("--out", out_dir, "output directory")->required();

    // ablate
    std::string seeds_spec = "1,2,3";
    auto* ab = app.add_subcommand("ablate", "full/no_text/no_pretrain ablation suite");
    ab->add_option("--data", data_dir, "dataset directory")->required();
    ab->add_option("--seeds", seeds_spec, "comma-separated seeds");
    ab->add_option("--report", report_path, "output CSV path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_data(common, out_dir, episodes, seed_flag, mix_spec);
        }
        if (tt->parsed()) {
            return cmd_train_teacher(common, data_dir, ckpt_out);
        }
        if (ps->parsed()) {
            return cmd_pretrain(common, data_dir, teacher_path, ckpt_out, no_text);
        }
        if (ft->parsed()) {
            return cmd_finetune(common, data_dir, ckpt_path, ckpt_out);
        }
        if (init->parsed()) {
            return cmd_init_student(common, ckpt_out);
        }
        if (eo->parsed()) {
            return cmd_eval_offline(common, data_dir, ckpt_paths, split, report_path);
        }
        if (ec->parsed()) {
            return cmd_eval_closedloop(common, ckpt_path, scenario, trials, trial_seed,
                                       report_path);
        }
        if (ea->parsed()) {
            return cmd_export_activations(common, ckpt_path, data_dir, episode_idx, step_idx,
                                          out_dir);
        }
        if (ab->parsed()) {
            return cmd_ablate(common, data_dir, seeds_spec, report_path);
        }
    } catch (const n2n::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const n2n::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const n2n::ContractError& e) {
        std::cerr << "contract error: " << e.what() << "\n";
        return 3;
    } catch (const n2n::DegenerateBatchError& e) {
        std::cerr << "degenerate batch: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
