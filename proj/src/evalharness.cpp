#include "n2n/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "n2n/errors.hpp"
#include "n2n/metrics.hpp"

namespace n2n::evalh {

using nlohmann::json;

namespace {

struct Accum {
    double aoe = 0.0;
    double ade = 0.0;
    double fde = 0.0;
    int64_t n = 0;

    void add(const metrics::TrajectoryPair& pair) {
        aoe += metrics::aoe(pair);
        ade += metrics::ade(pair);
        fde += metrics::fde(pair);
        ++n;
    }
    void merge(const Accum& o) {
        aoe += o.aoe;
        ade += o.ade;
        fde += o.fde;
        n += o.n;
    }
    MetricRow row(const std::string& scenario, const std::string& method) const {
        MetricRow r;
        r.scenario = scenario;
        r.method = method;
        r.aoe = aoe / static_cast<double>(n);
        r.ade = ade / static_cast<double>(n);
        r.fde = fde / static_cast<double>(n);
        r.n = n;
        return r;
    }
};

std::string csv_escape(const std::string& s) { return s; }  // names are identifier-like

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void write_text_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path);
    }
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) {
        throw IoError("short write to " + path);
    }
}

}  // namespace

MetricsReport eval_offline(const models::StudentModel& student, const sim::DatasetManifest& data,
                           const std::string& split, const std::string& method, int threads) {
    if (!data.has_split(split)) {
        throw ConfigError("eval_offline: dataset has no split \"" + split + "\"");
    }
    const std::vector<sim::Episode> eps = sim::load_split(data, split);
    const int horizon = student.dims().horizon;

    // Per-episode accumulators evaluated in parallel, merged in episode order.
    std::vector<Accum> per_episode(eps.size());
    const int workers = std::max(1, threads);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (size_t e = static_cast<size_t>(w); e < eps.size();
                     e += static_cast<size_t>(workers)) {
                    const sim::Episode& ep = eps[e];
                    for (int t = horizon - 1; t < ep.steps(); ++t) {
                        std::vector<Image> window(
                            ep.frames.begin() + (t - horizon + 1),
                            ep.frames.begin() + (t + 1));
                        const Trajectory pred = pipeline::infer_actions(
                            student, window, train::goal_at_step(ep, t));
                        per_episode[e].add({pred, ep.labels[static_cast<size_t>(t)]});
                    }
                }
            } catch (...) {
                errors[static_cast<size_t>(w)] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& err : errors) {
        if (err) {
            std::rethrow_exception(err);
        }
    }

    std::map<std::string, Accum> by_scenario;
    Accum all;
    for (size_t e = 0; e < eps.size(); ++e) {
        by_scenario[to_string(eps[e].scenario)].merge(per_episode[e]);
        all.merge(per_episode[e]);
    }

    MetricsReport report;
    report.method = method;
    report.dataset_hash = data.dataset_hash;
    for (const auto& [scenario, acc] : by_scenario) {
        report.rows.push_back(acc.row(scenario, method));
    }
    report.rows.push_back(all.row("All", method));
    return report;
}

ComparisonTable compare_methods(const std::vector<MetricsReport>& reports) {
    if (reports.size() < 2) {
        throw ContractError("compare_methods: need at least two reports");
    }
    for (const auto& r : reports) {
        if (r.dataset_hash != reports.front().dataset_hash) {
            throw ContractError("compare_methods: dataset hashes differ");
        }
    }
    auto all_ade = [](const MetricsReport& r) {
        for (const auto& row : r.rows) {
            if (row.scenario == "All") {
                return row.ade;
            }
        }
        throw ContractError("compare_methods: report lacks an All row");
    };

    ComparisonTable table;
    table.designated_method = reports.front().method;
    const double ours = all_ade(reports.front());
    double best_other = std::numeric_limits<double>::infinity();
    for (size_t i = 1; i < reports.size(); ++i) {
        const double ade = all_ade(reports[i]);
        if (ade < best_other) {
            best_other = ade;
            table.best_other_method = reports[i].method;
        }
    }
    table.improvement_pct = best_other != 0.0 ? 100.0 * (best_other - ours) / best_other : 0.0;
    for (const auto& r : reports) {
        table.rows.insert(table.rows.end(), r.rows.begin(), r.rows.end());
    }
    return table;
}

void write_report_csv(const MetricsReport& report, const std::string& path) {
    std::string out = "scenario,method,aoe,ade,fde,n\n";
    for (const auto& r : report.rows) {
        out += csv_escape(r.scenario) + "," + csv_escape(r.method) + "," + format_double(r.aoe) +
               "," + format_double(r.ade) + "," + format_double(r.fde) + "," +
               std::to_string(r.n) + "\n";
    }
    write_text_file(path, out);

    json sidecar{{"dataset_hash", report.dataset_hash},
                 {"checkpoint_id", report.checkpoint_id},
                 {"seed", report.seed},
                 {"method", report.method}};
    write_text_file(path + ".provenance.json", sidecar.dump(2) + "\n");
}

void write_comparison_csv(const ComparisonTable& table, const std::string& path) {
    std::string out = "scenario,method,aoe,ade,fde,n,improvement_pct\n";
    const std::string imp = format_double(table.improvement_pct);
    for (const auto& r : table.rows) {
        out += csv_escape(r.scenario) + "," + csv_escape(r.method) + "," + format_double(r.aoe) +
               "," + format_double(r.ade) + "," + format_double(r.fde) + "," +
               std::to_string(r.n) + "," + imp + "\n";
    }
    write_text_file(path, out);
}

ActivationExport export_activations(const models::StudentModel& student, const sim::Episode& ep,
                                    int step) {
    if (step < 0 || step >= ep.steps()) {
        throw ContractError("export_activations: step out of range");
    }
    const int horizon = student.dims().horizon;
    std::vector<Image> window;
    window.reserve(static_cast<size_t>(horizon));
    for (int k = step - horizon + 1; k <= step; ++k) {
        window.push_back(ep.frames[static_cast<size_t>(std::max(0, k))]);
    }

    nn::Tape tape(student.params(), nullptr);
    models::StudentModel::ForwardOptions opts;
    opts.want_attention = true;
    opts.want_features = true;
    auto fwd = student.forward(tape, window, train::goal_at_step(ep, step), opts);

    ActivationExport out;
    for (nn::Var fm : fwd.feature_maps) {
        const int c = fm->val.dim(0);
        const int h = fm->val.dim(1);
        const int w = fm->val.dim(2);
        ActivationMap map;
        map.h = h;
        map.w = w;
        map.source = "conv-channel-mean";
        map.grid.assign(static_cast<size_t>(h) * w, 0.0);
        for (int ch = 0; ch < c; ++ch) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    map.grid[static_cast<size_t>(y) * w + x] += fm->val.at(ch, y, x) / c;
                }
            }
        }
        const auto [mn_it, mx_it] = std::minmax_element(map.grid.begin(), map.grid.end());
        const double mn = *mn_it;
        const double mx = *mx_it;
        if (mx - mn < 1e-12) {
            std::fill(map.grid.begin(), map.grid.end(), 0.0);  // constant-map convention
        } else {
            for (auto& v : map.grid) {
                v = (v - mn) / (mx - mn);
            }
        }
        out.maps.push_back(std::move(map));
    }

    const models::SequenceLayout lay = student.layout();
    const int ctx_row = lay.ctx_index();
    for (int k = 0; k < horizon; ++k) {
        out.ctx_attention.push_back(fwd.attention.at(ctx_row, lay.state_index(k)));
    }
    return out;
}

void write_pgm(const ActivationMap& map, const std::string& path) {
    std::string out = "P5\n" + std::to_string(map.w) + " " + std::to_string(map.h) + "\n255\n";
    for (double v : map.grid) {
        const double clamped = clamp(v, 0.0, 1.0);
        out.push_back(static_cast<char>(static_cast<unsigned char>(clamped * 255.0 + 0.5)));
    }
    write_text_file(path, out);
}

ComparisonTable run_ablation_suite(const sim::DatasetManifest& data,
                                   const std::vector<uint64_t>& seeds, const Config& cfg,
                                   int threads, std::ostream* progress) {
    if (seeds.empty()) {
        throw ConfigError("run_ablation_suite: need at least one seed");
    }
    auto note = [&](const std::string& msg) {
        if (progress != nullptr) {
            (*progress) << msg << "\n" << std::flush;
        }
    };

    std::vector<MetricsReport> reports;
    struct MeanAcc {
        double aoe = 0.0, ade = 0.0, fde = 0.0;
        int64_t n = 0;
        int count = 0;
    };
    std::map<std::string, MeanAcc> means;

    for (uint64_t seed : seeds) {
        note("[ablate] seed " + std::to_string(seed) + ": teacher");
        const Checkpoint teacher = pipeline::train_teacher_ckpt(data, cfg, seed, threads);

        note("[ablate] seed " + std::to_string(seed) + ": pretrain full");
        const Checkpoint pre_full =
            pipeline::pretrain_student_ckpt(data, teacher, cfg, seed, false, threads);
        note("[ablate] seed " + std::to_string(seed) + ": finetune full");
        const Checkpoint full =
            pipeline::finetune_student_ckpt(data, pre_full, cfg, seed, threads);

        note("[ablate] seed " + std::to_string(seed) + ": pretrain no_text");
        const Checkpoint pre_nt =
            pipeline::pretrain_student_ckpt(data, teacher, cfg, seed, true, threads);
        note("[ablate] seed " + std::to_string(seed) + ": finetune no_text");
        const Checkpoint no_text =
            pipeline::finetune_student_ckpt(data, pre_nt, cfg, seed, threads);

        note("[ablate] seed " + std::to_string(seed) + ": finetune no_pretrain");
        const Checkpoint scratch = pipeline::scratch_student_ckpt(cfg, seed);
        const Checkpoint bc = pipeline::finetune_student_ckpt(data, scratch, cfg, seed, threads);

        const std::string suffix = "_seed" + std::to_string(seed);
        const struct {
            const Checkpoint* ckpt;
            std::string name;
        } variants[] = {{&full, "full"}, {&no_text, "no_text"}, {&bc, "no_pretrain"}};
        for (const auto& v : variants) {
            auto student = pipeline::student_from_checkpoint(*v.ckpt);
            MetricsReport r =
                eval_offline(*student, data, cfg.eval.split, v.name + suffix, threads);
            r.seed = seed;
            r.checkpoint_id = v.ckpt->meta.config_hash + ":" + v.ckpt->meta.stage + ":" +
                              std::to_string(seed) + (v.ckpt->meta.variant.empty()
                                                          ? ""
                                                          : ":" + v.ckpt->meta.variant);
            for (const auto& row : r.rows) {
                if (row.scenario == "All") {
                    auto& m = means[v.name];
                    m.aoe += row.aoe;
                    m.ade += row.ade;
                    m.fde += row.fde;
                    m.n += row.n;
                    m.count += 1;
                }
            }
            reports.push_back(std::move(r));
        }
    }

    ComparisonTable table;
    table.designated_method = "full";
    for (const auto& r : reports) {
        table.rows.insert(table.rows.end(), r.rows.begin(), r.rows.end());
    }
    for (const auto& [name, m] : means) {
        MetricRow row;
        row.scenario = "All";
        row.method = name + "_mean";
        row.aoe = m.aoe / m.count;
        row.ade = m.ade / m.count;
        row.fde = m.fde / m.count;
        row.n = m.n;
        table.rows.push_back(row);
    }
    // Published reference values for the text ablation (All column).
    table.rows.push_back({"All", "reference_ablation", 0.06, 0.19, 0.24, 1});
    table.rows.push_back({"All", "reference_full", 0.04, 0.16, 0.24, 1});

    const double ours = means["full"].ade / means["full"].count;
    const double bc_ade = means["no_pretrain"].ade / means["no_pretrain"].count;
    table.best_other_method = "no_pretrain";
    table.improvement_pct = bc_ade != 0.0 ? 100.0 * (bc_ade - ours) / bc_ade : 0.0;
    return table;
}

}  // namespace n2n::evalh
