#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mno/mno.hpp"

// Pipeline front end: generate | train | evaluate | bench | plot.
// Exit codes: 0 success, 1 usage/config error, 2 runtime failure.

namespace fs = std::filesystem;
using namespace mno;

namespace {

struct CommonOpts {
    std::string config_path;
    std::vector<std::string> sets;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "key=value config file");
    cmd->add_option("--set", o.sets, "override single keys, e.g. --set K=8")
        ->type_name("KEY=VALUE");
    cmd->add_option("--seed", o.seed, "root seed (overrides config and --set)")
        ->each([&o](const std::string&) { o.seed_given = true; });
}

RunConfig resolve_config(const CommonOpts& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) load_config(cfg, o.config_path);
    for (const std::string& kv : o.sets) {
        const std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw ConfigError("--set expects KEY=VALUE, got '" + kv + "'");
        config_set(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed_given) cfg.seed = o.seed;
    return cfg;
}

/// Every run leaves a sidecar that reproduces it byte-for-byte when fed back
/// through --config.
void write_sidecar(const RunConfig& cfg, const std::string& out_path) {
    save_config(cfg, out_path + ".resolved.cfg");
}

std::string join_dir(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

// ---- generate --------------------------------------------------------------

int cmd_generate(const CommonOpts& common, const std::string& split, const std::string& out,
                 bool csv) {
    RunConfig cfg = resolve_config(common);
    const ScaleParams p = cfg.params();
    const bool train_split = split == "train";
    const int n = train_split ? cfg.n_train : cfg.n_test;
    // disjoint seed streams per split so train/test never share a trajectory
    const std::uint64_t master = split_mix(cfg.seed, train_split ? 0x7261ull : 0x7465ull);
    int threads = cfg.gen_threads;
    if (threads <= 0)
        threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    GenStats stats;
    const Dataset ds =
        generate_dataset(p, master, n, cfg.T_steps, cfg.warmup_steps(),
                         train_split ? kSplitTrain : kSplitTest, cfg.debug_y, threads, &stats);
    save_dataset(ds, out);
    if (csv) export_csv(ds, out + ".csv");
    write_sidecar(cfg, out);

    std::printf("wrote %s: split=%s n=%u T=%u K=%u J=%u dt=%s seed=%llu retries=%d\n",
                out.c_str(), split.c_str(), ds.hdr.n_snippets, ds.hdr.T, ds.hdr.K, ds.hdr.J,
                fmt_g17(ds.hdr.dt).c_str(),
                static_cast<unsigned long long>(ds.hdr.master_seed), stats.blowup_retries);
    return 0;
}

// ---- train -----------------------------------------------------------------

void write_loss_csv(const std::string& path, const std::vector<LossPoint>& curve) {
    CsvWriter w(path);
    w.row({"step", "lr", "mse"});
    for (const LossPoint& lp : curve)
        w.row({std::to_string(lp.step), fmt_g17(lp.lr), fmt_g17(lp.mse)});
}

int cmd_train(const CommonOpts& common, const std::string& data, const std::string& method,
              const std::string& out) {
    RunConfig cfg = resolve_config(common);
    const Dataset ds = load_dataset(data);

    if (method == "fno") {
        const FnoConfig fc = cfg.fno();
        fc.validate_grid(static_cast<int>(ds.hdr.K));
        const FnoTrainResult r = train_fno(ds, fc, cfg.fno_train(), true);
        save_fno(fc, r.params, out);
        write_loss_csv(out + ".loss.csv", r.curve);
        const double mse = fno_offline_mse(fc, r.params, ds);
        std::printf("wrote %s: fno steps=%zu final_offline_mse=%s\n", out.c_str(),
                    r.curve.size(), fmt_g17(mse).c_str());
    } else if (method == "linear") {
        const LinearParam lp = cfg.linear_global ? fit_linear_global(ds) : fit_linear(ds);
        save_linear(lp, out);
        const double mse = linear_offline_mse(lp, ds);
        if (lp.global)
            std::printf("wrote %s: linear(global K=%u) offline_mse=%s\n", out.c_str(), ds.hdr.K,
                        fmt_g17(mse).c_str());
        else
            std::printf("wrote %s: linear a=%s b0=%s offline_mse=%s\n", out.c_str(),
                        fmt_g17(lp.a).c_str(), fmt_g17(lp.b0).c_str(), fmt_g17(mse).c_str());
    } else if (method == "resnet") {
        const ResNetConfig rc = cfg.resnet();
        const ResNetTrainResult r = fit_resnet(ds, rc, cfg.resnet_train(), true);
        save_resnet(rc, r.params, out);
        write_loss_csv(out + ".loss.csv", r.curve);
        const double mse = resnet_offline_mse(rc, r.params, ds);
        std::printf("wrote %s: resnet steps=%zu final_offline_mse=%s\n", out.c_str(),
                    r.curve.size(), fmt_g17(mse).c_str());
    } else if (method == "climatology") {
        const Climatology c = compute_climatology(ds);
        save_climatology(c, out);
        std::printf("wrote %s: climatology mean=%s std=%s n=%llu\n", out.c_str(),
                    fmt_g17(c.mean).c_str(), fmt_g17(c.std_dev).c_str(),
                    static_cast<unsigned long long>(c.count));
    } else {
        throw ConfigError("unknown training method '" + method + "'");
    }
    write_sidecar(cfg, out);
    return 0;
}

// ---- evaluate --------------------------------------------------------------

std::string method_name(const LoadedModel& m) {
    switch (m.type) {
    case io::ModelType::fno: return "mno";
    case io::ModelType::linear: return m.linear.global ? "linear_global" : "linear";
    case io::ModelType::resnet: return "resnet";
    case io::ModelType::climatology: return "climatology";
    }
    return "?";
}

int cmd_evaluate(const CommonOpts& common, const std::string& data,
                 const std::vector<std::string>& model_paths, const std::string& out_dir,
                 bool with_truth) {
    RunConfig cfg = resolve_config(common);
    const Dataset ds = load_dataset(data);
    const int K = static_cast<int>(ds.hdr.K);
    const int N = static_cast<int>(ds.snippets.size());
    fs::create_directories(out_dir);

    std::vector<LoadedModel> models;
    models.reserve(model_paths.size());
    for (const std::string& mp : model_paths) models.push_back(load_model(mp));

    const Climatology* clim = nullptr;
    for (const LoadedModel& m : models)
        if (m.type == io::ModelType::climatology) clim = &m.clim;
    if (!clim)
        throw ConfigError(
            "evaluate: a climatology model is required (horizons are measured against it)");

    std::vector<std::unique_ptr<Parametrization>> params;
    std::vector<MethodSpec> methods;
    for (const LoadedModel& m : models) {
        MethodSpec spec;
        spec.name = method_name(m);
        if (m.type == io::ModelType::climatology) {
            spec.kind = MethodKind::climatology;
        } else {
            spec.kind = MethodKind::rollout;
            params.push_back(make_parametrization(m, K, N));
            spec.param = params.back().get();
        }
        methods.push_back(std::move(spec));
    }
    if (with_truth) methods.push_back({"truth", MethodKind::truth, nullptr});

    const EvalConfig ec = cfg.eval_cfg();
    const std::vector<RolloutReport> reports = evaluate_all(ds, *clim, methods, ec);

    {
        CsvWriter w(join_dir(out_dir, "summary.csv"));
        w.row({"method", "rmse", "horizon_steps", "horizon_mtu", "bounded_fraction",
               "n_excluded"});
        for (const RolloutReport& r : reports)
            w.row({r.name, fmt_g17(r.rmse), std::to_string(r.horizon_steps),
                   fmt_g17(r.horizon_mtu), fmt_g17(r.bounded_fraction),
                   std::to_string(r.n_excluded)});
    }
    const double dt = ds.hdr.dt;
    {
        CsvWriter w(join_dir(out_dir, "rmse_t.csv"));
        std::vector<std::string> head{"t", "mtu"};
        for (const RolloutReport& r : reports) head.push_back(r.name);
        w.row(head);
        const std::size_t T = reports.empty() ? 0 : reports[0].rmse_t.size();
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<std::string> row{std::to_string(t), fmt_g17(t * dt)};
            for (const RolloutReport& r : reports) row.push_back(fmt_g17(r.rmse_t[t]));
            w.row(row);
        }
    }
    {
        CsvWriter w(join_dir(out_dir, "ensemble.csv"));
        std::vector<std::string> head{"t", "mtu"};
        for (const RolloutReport& r : reports) {
            head.push_back("mean_" + r.name);
            head.push_back("std_" + r.name);
        }
        w.row(head);
        const std::size_t T = reports.empty() ? 0 : reports[0].mean_t.size();
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<std::string> row{std::to_string(t), fmt_g17(t * dt)};
            for (const RolloutReport& r : reports) {
                row.push_back(fmt_g17(r.mean_t[t]));
                row.push_back(fmt_g17(r.std_t[t]));
            }
            w.row(row);
        }
    }
    {
        CsvWriter w(join_dir(out_dir, "trajectories.csv"));
        std::vector<std::string> head{"method", "sample", "t", "mtu"};
        for (int k = 0; k < K; ++k) head.push_back("X_" + std::to_string(k));
        w.row(head);
        for (const RolloutReport& r : reports) {
            const int np = r.sample_traj.shape.empty() ? 0 : r.sample_traj.shape[0];
            const int T = np ? r.sample_traj.shape[1] : 0;
            for (int i = 0; i < np; ++i)
                for (int t = 0; t < T; ++t) {
                    std::vector<std::string> row{r.name, std::to_string(i), std::to_string(t),
                                                 fmt_g17(t * dt)};
                    for (int k = 0; k < K; ++k)
                        row.push_back(fmt_g17(
                            r.sample_traj.data[(static_cast<std::size_t>(i) * T + t) * K + k]));
                    w.row(row);
                }
        }
    }

    // figures: RMSE(t) per method; first-sample X_0(t) per method vs truth
    {
        std::vector<Series> ser;
        for (const RolloutReport& r : reports) {
            Series s;
            s.label = r.name;
            for (std::size_t t = 0; t < r.rmse_t.size(); ++t) {
                s.x.push_back(t * dt);
                s.y.push_back(r.rmse_t[t]);
            }
            ser.push_back(std::move(s));
        }
        PlotSpec ps;
        ps.title = "Forecast RMSE over time";
        ps.xlabel = "time (MTU)";
        ps.ylabel = "RMSE";
        write_svg_lineplot(join_dir(out_dir, "rmse_t.svg"), ps, ser);
    }
    {
        std::vector<Series> ser;
        Series truth_s;
        truth_s.label = "truth";
        const Snippet& sn = ds.snippets[0];
        const int T = reports.empty() ? 0 : reports[0].sample_traj.shape[1];
        for (int t = 0; t < T; ++t) {
            truth_s.x.push_back(t * dt);
            truth_s.y.push_back(sn.X.data[static_cast<std::size_t>(t) * K]);
        }
        ser.push_back(std::move(truth_s));
        for (const RolloutReport& r : reports) {
            if (r.name == "truth") continue;
            Series s;
            s.label = r.name;
            for (int t = 0; t < T; ++t) {
                s.x.push_back(t * dt);
                s.y.push_back(r.sample_traj.data[static_cast<std::size_t>(t) * K]);
            }
            ser.push_back(std::move(s));
        }
        PlotSpec ps;
        ps.title = "Sample trajectory, X_0";
        ps.xlabel = "time (MTU)";
        ps.ylabel = "X_0";
        write_svg_lineplot(join_dir(out_dir, "trajectory.svg"), ps, ser);
    }

    save_config(cfg, join_dir(out_dir, "config.resolved.cfg"));

    std::printf("%-14s %12s %9s %8s %10s %6s\n", "method", "rmse", "horizon", "mtu", "bounded",
                "excl");
    for (const RolloutReport& r : reports)
        std::printf("%-14s %12.6g %9d %8.3f %10.4f %6d\n", r.name.c_str(), r.rmse,
                    r.horizon_steps, r.horizon_mtu, r.bounded_fraction, r.n_excluded);
    return 0;
}

// ---- bench -----------------------------------------------------------------

int cmd_bench(const CommonOpts& common, const std::string& out_dir) {
    RunConfig cfg = resolve_config(common);
    const ScaleParams base = cfg.params();
    const BenchConfig bc = cfg.bench_cfg();
    fs::create_directories(out_dir);

    const SweepResult sweep = bench_sweep(base, bc, true);
    write_bench_csv(join_dir(out_dir, "bench.csv"), sweep);
    write_skip_log(join_dir(out_dir, "bench_skipped.csv"), sweep);

    {
        std::ofstream env(join_dir(out_dir, "environment.txt"));
        env << environment_summary();
    }

    // log-log runtime plot
    {
        std::vector<Series> ser(2);
        ser[0].label = "dns";
        ser[1].label = "mno";
        for (const BenchRecord& r : sweep.records) {
            Series& s = r.method == "dns" ? ser[0] : ser[1];
            s.x.push_back(static_cast<double>(r.K));
            s.y.push_back(r.best_ns);
        }
        PlotSpec ps;
        ps.title = "One-step runtime";
        ps.xlabel = "grid size K";
        ps.ylabel = "best-of-R step time (ns)";
        ps.logx = ps.logy = true;
        write_svg_lineplot(join_dir(out_dir, "bench.svg"), ps, ser);
    }

    {
        CsvWriter w(join_dir(out_dir, "ratios.csv"));
        w.row({"log2_K", "K", "dns_ns", "mno_ns", "ratio"});
        for (const BenchRecord& d : sweep.records) {
            if (d.method != "dns") continue;
            for (const BenchRecord& m : sweep.records) {
                if (m.method != "mno" || m.log2_k != d.log2_k) continue;
                w.row({std::to_string(d.log2_k), std::to_string(d.K), fmt_g17(d.best_ns),
                       fmt_g17(m.best_ns), fmt_g17(d.best_ns / m.best_ns)});
            }
        }
    }

    CsvWriter w(join_dir(out_dir, "scaling.csv"));
    w.row({"method", "knee_log2", "n", "slope", "intercept", "r2"});
    for (const std::string& method : {std::string("dns"), std::string("mno")}) {
        try {
            const ScalingFit f = fit_scaling(sweep.records, method, bc.knee_log2);
            w.row({method, std::to_string(bc.knee_log2), std::to_string(f.n), fmt_g17(f.slope),
                   fmt_g17(f.intercept), fmt_g17(f.r2)});
            std::printf("%s: slope %.4f (r2 %.5f, n=%d at K >= 2^%d)\n", method.c_str(), f.slope,
                        f.r2, f.n, bc.knee_log2);
        } catch (const Error& e) {
            w.row({method, std::to_string(bc.knee_log2), "0", "nan", "nan", "nan"});
            std::printf("%s: no fit (%s)\n", method.c_str(), e.what());
        }
    }
    for (const SkipRecord& s : sweep.skipped)
        std::printf("skipped %s K=2^%d: %s\n", s.method.c_str(), s.log2_k, s.reason.c_str());

    save_config(cfg, join_dir(out_dir, "config.resolved.cfg"));
    return 0;
}

// ---- plot ------------------------------------------------------------------

int cmd_plot(const std::string& in, const std::string& out, bool logx, bool logy,
             const std::string& title) {
    const CsvTable t = read_csv(in);
    std::vector<Series> ser;
    const bool bench_schema = !t.header.empty() && t.header[0] == "method";
    if (bench_schema) {
        // grouped: one series per distinct method, x=K, y=last column
        const int ck = t.col("K");
        const int cy = static_cast<int>(t.header.size()) - 1;
        std::vector<std::string> methods;
        for (const auto& row : t.rows)
            if (std::find(methods.begin(), methods.end(), row[0]) == methods.end())
                methods.push_back(row[0]);
        for (const std::string& m : methods) {
            Series s;
            s.label = m + " " + t.header[cy];
            for (const auto& row : t.rows) {
                if (row[0] != m) continue;
                s.x.push_back(csv_num(row[ck], in));
                s.y.push_back(csv_num(row[cy], in));
            }
            ser.push_back(std::move(s));
        }
    } else {
        // generic: first column is x, every other column is a series
        if (t.header.size() < 2) throw IoError("plot: need at least two columns in " + in);
        for (std::size_t c2 = 1; c2 < t.header.size(); ++c2) {
            Series s;
            s.label = t.header[c2];
            for (const auto& row : t.rows) {
                s.x.push_back(csv_num(row[0], in));
                s.y.push_back(csv_num(row[c2], in));
            }
            ser.push_back(std::move(s));
        }
    }
    PlotSpec ps;
    ps.title = title.empty() ? fs::path(in).filename().string() : title;
    ps.xlabel = t.header[0] == "method" ? "K" : t.header[0];
    ps.ylabel = ser.empty() ? "" : ser[0].label;
    if (ser.size() > 1) ps.ylabel = "";
    ps.logx = logx;
    ps.logy = logy;
    write_svg_lineplot(out, ps, ser);
    std::printf("wrote %s (%zu series)\n", out.c_str(), ser.size());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-scale Lorenz96 subgrid closure: data, training, rollout, timing"};
    app.require_subcommand(1);

    CommonOpts gen_o, train_o, eval_o, bench_o;
    std::string gen_split = "train", gen_out = "dataset.bin";
    bool gen_csv = false;
    CLI::App* c_gen = app.add_subcommand("generate", "integrate snippets and write a dataset");
    add_common(c_gen, gen_o);
    c_gen->add_option("--split", gen_split, "train|test")
        ->check(CLI::IsMember({"train", "test"}));
    c_gen->add_option("--out", gen_out, "output dataset path")->required();
    c_gen->add_flag("--csv", gen_csv, "also export <out>.csv");

    std::string train_data, train_method = "fno", train_out = "model.bin";
    CLI::App* c_train = app.add_subcommand("train", "fit a parametrization to a dataset");
    add_common(c_train, train_o);
    c_train->add_option("--data", train_data, "training dataset")->required();
    c_train->add_option("--method", train_method, "fno|linear|resnet|climatology")
        ->check(CLI::IsMember({"fno", "linear", "resnet", "climatology"}));
    c_train->add_option("--out", train_out, "output weights path")->required();

    std::string eval_data, eval_out = "eval";
    std::vector<std::string> eval_models;
    bool eval_truth = false;
    CLI::App* c_eval = app.add_subcommand("evaluate", "rollout models against a test dataset");
    add_common(c_eval, eval_o);
    c_eval->add_option("--data", eval_data, "test dataset")->required();
    c_eval->add_option("--models", eval_models, "weight files (include a climatology)")
        ->required()
        ->expected(-1);
    c_eval->add_option("--out", eval_out, "output directory");
    c_eval->add_flag("--truth", eval_truth, "add a truth-vs-truth debug row");

    std::string bench_out = "bench";
    CLI::App* c_bench = app.add_subcommand("bench", "one-step runtime sweep over grid sizes");
    add_common(c_bench, bench_o);
    c_bench->add_option("--out", bench_out, "output directory");

    std::string plot_in, plot_out, plot_title;
    bool plot_logx = false, plot_logy = false;
    CLI::App* c_plot = app.add_subcommand("plot", "render a CSV to an SVG line plot");
    c_plot->add_option("--in", plot_in, "input CSV")->required();
    c_plot->add_option("--out", plot_out, "output SVG")->required();
    c_plot->add_flag("--logx", plot_logx, "log10 x axis");
    c_plot->add_flag("--logy", plot_logy, "log10 y axis");
    c_plot->add_option("--title", plot_title, "plot title");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints help, exits 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (c_gen->parsed()) return cmd_generate(gen_o, gen_split, gen_out, gen_csv);
        if (c_train->parsed()) return cmd_train(train_o, train_data, train_method, train_out);
        if (c_eval->parsed())
            return cmd_evaluate(eval_o, eval_data, eval_models, eval_out, eval_truth);
        if (c_bench->parsed()) return cmd_bench(bench_o, bench_out);
        if (c_plot->parsed())
            return cmd_plot(plot_in, plot_out, plot_logx, plot_logy, plot_title);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
