#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mno/mno.hpp"

// Acceptance gate.  Three groups, one [PASS]/[FAIL] line per criterion:
//   fast        criteria 1-5, self-contained numerics (seconds)
//   pipeline    criteria 6-8 and 10, full generate/train/evaluate run (minutes)
//   complexity  criterion 9, one-step runtime sweep over grid sizes
// Exit code is the number of failed criteria.

namespace fs = std::filesystem;
using namespace mno;

namespace {

int g_failures = 0;

class Timer {
public:
    Timer() : t0_(std::chrono::steady_clock::now()) {}
    double s() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    }

private:
    std::chrono::steady_clock::time_point t0_;
};

void report(const char* id, bool ok, const std::string& detail) {
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", id, detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

void info(const std::string& msg) {
    std::printf("       %s\n", msg.c_str());
    std::fflush(stdout);
}

std::string num(double v) {
    std::ostringstream out;
    out.precision(6);
    out << v;
    return out.str();
}

// ---- criterion 1: grid-independent target identity ---------------------------

void criterion_target_identity() {
    Timer timer;
    ScaleParams p;
    Rng rng(0xACCE01);
    const double coup = p.h_s * p.c / p.b;
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
        FullState s(p.K, p.J);
        for (int k = 0; k < p.K; ++k) s.X()[k] = rng.uniform_sym(12.0);
        for (std::size_t i = p.K; i < s.u.size(); ++i) s.u[i] = rng.uniform_sym(3.0);
        const std::vector<double> h = subgrid_target(p, s);
        for (int k = 0; k < p.K; ++k) {
            double sum_y = 0.0;
            for (int j = 0; j < p.J; ++j) sum_y += s.Y(j, k);
            worst = std::max(worst, std::abs(h[k] + coup * sum_y));
        }
    }
    const double el = timer.s();
    report("01 subgrid target identity", worst <= 1e-12 && el < 1.0,
           "max |h - (-h_s c/b sum_j Y)| = " + fmt_g17(worst) + " (<= 1e-12), " + num(el) + " s");
}

// ---- criterion 2: integrator order -------------------------------------------

void criterion_rk4_order() {
    Timer timer;
    auto err_at = [](int n) {
        CoarseState s(2), k, u, acc;
        s.u[0] = 1.0;
        s.u[1] = 0.0;
        auto f = [](const CoarseState& in, CoarseState& out) {
            out.u[0] = in.u[1];
            out.u[1] = -in.u[0];
        };
        const double dt = 2.0 * std::numbers::pi / n;
        for (int t = 0; t < n; ++t) rk4_step_into(f, s, dt, k, u, acc, s);
        return std::hypot(s.u[0] - 1.0, s.u[1]);
    };
    const double e64 = err_at(64), e128 = err_at(128), e256 = err_at(256);
    const double o1 = std::log2(e64 / e128), o2 = std::log2(e128 / e256);
    const double el = timer.s();
    const bool ok = o1 > 3.9 && o1 < 4.1 && o2 > 3.9 && o2 < 4.1 && el < 1.0;
    report("02 rk4 convergence order", ok,
           "harmonic oscillator orders " + num(o1) + ", " + num(o2) + " (in [3.9, 4.1]), " +
               num(el) + " s");
}

// ---- criterion 3: spectral kernel ---------------------------------------------

void criterion_spectral() {
    Rng rng(0xACCE03);
    double worst_fwd = 0.0, worst_rt = 0.0;
    for (const int K : {4, 7, 12, 16, 32}) {
        const int k_full = K / 2 + 1;
        for (const int k_max : {k_full, std::min(3, k_full)}) {
            const DftPlan plan(K, k_max);
            std::vector<double> x(K);
            for (double& v : x) v = rng.uniform_sym(2.0);
            std::vector<cplx> H(k_max), scratch(plan.scratch_len());
            dft_forward(plan, x.data(), 1, H.data(), scratch.data());

            for (int m = 0; m < k_max; ++m) {
                cplx ref(0.0, 0.0);
                for (int xx = 0; xx < K; ++xx) {
                    const double ang = -2.0 * std::numbers::pi * m * xx / K;
                    ref += x[xx] * cplx(std::cos(ang), std::sin(ang));
                }
                worst_fwd = std::max(worst_fwd, std::abs(H[m] - ref));
            }
            if (k_max == k_full) {
                std::vector<double> y(K);
                dft_inverse(plan, H.data(), 1, y.data(), scratch.data());
                for (int i = 0; i < K; ++i) worst_rt = std::max(worst_rt, std::abs(y[i] - x[i]));
            }
        }
    }

    // translation of the input translates the output (no coordinate channel)
    FnoConfig cfg;
    cfg.n_v = 16;
    cfg.k_max = 3;
    cfg.n_d = 2;
    const FnoParams par = init_fno(cfg, 0xACCE3F);
    const int K = 8, B = 4;
    RealTensor X({B, K});
    for (double& v : X.data) v = rng.uniform_sym(2.0);
    const RealTensor Y0 = fno_forward(cfg, par, X);
    double worst_shift = 0.0;
    for (const int sh : {1, 3}) {
        RealTensor Xs({B, K});
        for (int b = 0; b < B; ++b)
            for (int k = 0; k < K; ++k)
                Xs.data[static_cast<std::size_t>(b) * K + (k + sh) % K] =
                    X.data[static_cast<std::size_t>(b) * K + k];
        const RealTensor Ys = fno_forward(cfg, par, Xs);
        for (int b = 0; b < B; ++b)
            for (int k = 0; k < K; ++k)
                worst_shift = std::max(
                    worst_shift,
                    std::abs(Ys.data[static_cast<std::size_t>(b) * K + (k + sh) % K] -
                             Y0.data[static_cast<std::size_t>(b) * K + k]));
    }

    const bool ok = worst_fwd <= 1e-10 && worst_rt <= 1e-12 && worst_shift <= 1e-10;
    report("03 spectral kernel", ok,
           "dft vs naive " + fmt_g17(worst_fwd) + " (<= 1e-10), round trip " + fmt_g17(worst_rt) +
               " (<= 1e-12), shift equivariance " + fmt_g17(worst_shift) + " (<= 1e-10)");
}

// ---- criterion 4: gradients vs central differences ----------------------------

double fd_worst_rel(std::vector<std::pair<double*, std::size_t>>& pspans,
                    const std::vector<std::pair<const double*, std::size_t>>& gspans,
                    const std::function<double()>& loss_of) {
    const double eps = 1e-6;
    double worst = 0.0;
    for (std::size_t si = 0; si < pspans.size(); ++si) {
        for (std::size_t i = 0; i < pspans[si].second; ++i) {
            double& v = pspans[si].first[i];
            const double keep = v;
            v = keep + eps;
            const double lp = loss_of();
            v = keep - eps;
            const double lm = loss_of();
            v = keep;
            const double fd = (lp - lm) / (2.0 * eps);
            const double an = gspans[si].first[i];
            const double rel =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-6});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

void criterion_gradients() {
    Timer timer;
    Rng rng(0xACCE04);

    // operator network, all parameter tensors including complex spectral weights
    FnoConfig cfg;
    cfg.n_v = 4;
    cfg.k_max = 2;
    cfg.n_d = 2;
    FnoParams par = init_fno(cfg, 0xACCE40);
    // push lift/projection away from relu kinks so finite differences stay smooth
    for (double& v : par.P.data) v *= 8.0;
    for (double& v : par.bP.data) v *= 8.0;
    for (double& v : par.Q.data) v *= 8.0;
    for (double& v : par.bQ.data) v *= 8.0;

    const int B = 3, K = 8;
    RealTensor X({B, K, 1}), target({B, K, 1});
    for (double& v : X.data) v = rng.uniform_sym(1.5);
    for (double& v : target.data) v = rng.uniform_sym(1.5);
    const DftPlan plan(K, cfg.k_max);

    Tape tape;
    const FnoGraph g = build_fno_graph(tape, cfg, par, &plan, X, &target);
    tape.backward(g.loss);
    auto fno_p = detail::fno_param_spans(par);
    const auto fno_g = detail::fno_grad_spans(tape, g);
    const double fno_rel = fd_worst_rel(fno_p, fno_g, [&] {
        Tape t2;
        const FnoGraph g2 = build_fno_graph(t2, cfg, par, &plan, X, &target);
        return t2.rval(g2.loss).data[0];
    });

    // pointwise residual baseline
    ResNetConfig rc;
    rc.units = 5;
    rc.blocks = 2;
    ResNetParams rpar = init_resnet(rc, 0xACCE41);
    RealTensor rx({7, 1}), rt({7, 1});
    for (double& v : rx.data) v = rng.uniform_sym(2.0);
    for (double& v : rt.data) v = rng.uniform_sym(2.0);

    Tape rtape;
    const ResNetGraph rg = build_resnet_graph(rtape, rpar, rx, &rt);
    rtape.backward(rg.loss);
    auto res_p = detail::resnet_param_spans(rpar);
    const auto res_g = detail::resnet_grad_spans(rtape, rg);
    const double res_rel = fd_worst_rel(res_p, res_g, [&] {
        Tape t2;
        const ResNetGraph g2 = build_resnet_graph(t2, rpar, rx, &rt);
        return t2.rval(g2.loss).data[0];
    });

    const double el = timer.s();
    const bool ok = fno_rel <= 1e-5 && res_rel <= 1e-5 && el < 30.0;
    report("04 gradient suite", ok,
           "max rel err vs central differences: operator " + fmt_g17(fno_rel) + ", resnet " +
               fmt_g17(res_rel) + " (<= 1e-5), " + num(el) + " s");
}

// ---- criterion 5: linear baseline vs householder least squares ----------------

// Dense QR solve of min ||A x - b|| for small column counts; written against
// the normal-equations route inside the library on purpose.
std::vector<double> qr_solve(std::vector<double> A, std::vector<double> b, int n, int m) {
    for (int j = 0; j < m; ++j) {
        double norm = 0.0;
        for (int i = j; i < n; ++i) norm += A[static_cast<std::size_t>(i) * m + j] *
                                            A[static_cast<std::size_t>(i) * m + j];
        norm = std::sqrt(norm);
        if (norm == 0.0) throw SingularError("qr_solve: zero column");
        if (A[static_cast<std::size_t>(j) * m + j] > 0.0) norm = -norm;
        std::vector<double> v(n - j);
        v[0] = A[static_cast<std::size_t>(j) * m + j] - norm;
        for (int i = j + 1; i < n; ++i) v[i - j] = A[static_cast<std::size_t>(i) * m + j];
        double vtv = 0.0;
        for (const double x : v) vtv += x * x;
        if (vtv == 0.0) continue;
        for (int c = j; c < m; ++c) {
            double dot = 0.0;
            for (int i = j; i < n; ++i) dot += v[i - j] * A[static_cast<std::size_t>(i) * m + c];
            const double f = 2.0 * dot / vtv;
            for (int i = j; i < n; ++i) A[static_cast<std::size_t>(i) * m + c] -= f * v[i - j];
        }
        double dot = 0.0;
        for (int i = j; i < n; ++i) dot += v[i - j] * b[i];
        const double f = 2.0 * dot / vtv;
        for (int i = j; i < n; ++i) b[i] -= f * v[i - j];
    }
    std::vector<double> x(m);
    for (int j = m - 1; j >= 0; --j) {
        double s = b[j];
        for (int c = j + 1; c < m; ++c) s -= A[static_cast<std::size_t>(j) * m + c] * x[c];
        x[j] = s / A[static_cast<std::size_t>(j) * m + j];
    }
    return x;
}

Dataset synthetic_dataset(int K, int n_snip, int T, std::uint64_t seed) {
    Dataset ds;
    ds.hdr.K = static_cast<std::uint32_t>(K);
    ds.hdr.J = 4;
    ds.hdr.T = static_cast<std::uint32_t>(T);
    ds.hdr.n_snippets = static_cast<std::uint32_t>(n_snip);
    ds.hdr.F = 20.0;
    ds.hdr.h_s = 0.5;
    ds.hdr.b = 10.0;
    ds.hdr.c = 8.0;
    ds.hdr.dt = 0.005;
    ds.hdr.master_seed = seed;
    for (int i = 0; i < n_snip; ++i) {
        Snippet sn;
        sn.id = static_cast<std::uint32_t>(i);
        sn.X = RealTensor({T, K});
        sn.H = RealTensor({T, K});
        ds.snippets.push_back(std::move(sn));
    }
    return ds;
}

void criterion_linear_oracle() {
    Rng rng(0xACCE05);
    double worst = 0.0;

    for (int inst = 0; inst < 20; ++inst) {
        const double a = rng.uniform_sym(3.0), b0 = rng.uniform_sym(2.0);
        Dataset ds = synthetic_dataset(4, 2, 25, 99);
        std::vector<double> design, rhs;
        for (Snippet& sn : ds.snippets)
            for (std::size_t i = 0; i < sn.X.numel(); ++i) {
                const double x = rng.uniform_sym(8.0);
                const double h = a * x + b0 + 0.3 * rng.uniform_sym(1.0);
                sn.X.data[i] = x;
                sn.H.data[i] = h;
                design.push_back(x);
                design.push_back(1.0);
                rhs.push_back(h);
            }
        const LinearParam lp = fit_linear(ds);
        const std::vector<double> ref =
            qr_solve(design, rhs, static_cast<int>(rhs.size()), 2);
        worst = std::max({worst, std::abs(lp.a - ref[0]), std::abs(lp.b0 - ref[1])});
    }

    // field-coupled variant: one least-squares system per output row
    double worst_global = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const int K = 4, rows = 90;
        Dataset ds = synthetic_dataset(K, 1, rows, 7);
        std::vector<double> A_true(static_cast<std::size_t>(K) * (K + 1));
        for (double& v : A_true) v = rng.uniform_sym(1.0);
        for (int t = 0; t < rows; ++t) {
            std::vector<double> x(K);
            for (double& v : x) v = rng.uniform_sym(5.0);
            for (int k = 0; k < K; ++k) {
                double h = A_true[static_cast<std::size_t>(k) * (K + 1) + K] +
                           0.2 * rng.uniform_sym(1.0);
                for (int i = 0; i < K; ++i)
                    h += A_true[static_cast<std::size_t>(k) * (K + 1) + i] * x[i];
                ds.snippets[0].X.data[static_cast<std::size_t>(t) * K + k] = x[k];
                ds.snippets[0].H.data[static_cast<std::size_t>(t) * K + k] = h;
            }
        }
        const LinearParam lp = fit_linear_global(ds);
        for (int k = 0; k < K; ++k) {
            std::vector<double> design, rhs;
            for (int t = 0; t < rows; ++t) {
                for (int i = 0; i < K; ++i)
                    design.push_back(ds.snippets[0].X.data[static_cast<std::size_t>(t) * K + i]);
                design.push_back(1.0);
                rhs.push_back(ds.snippets[0].H.data[static_cast<std::size_t>(t) * K + k]);
            }
            const std::vector<double> ref = qr_solve(design, rhs, rows, K + 1);
            for (int i = 0; i <= K; ++i)
                worst_global = std::max(
                    worst_global,
                    std::abs(lp.A.data[static_cast<std::size_t>(k) * (K + 1) + i] - ref[i]));
        }
    }

    const bool ok = worst <= 1e-8 && worst_global <= 1e-8;
    report("05 linear baseline vs qr oracle", ok,
           "20 local instances max dev " + fmt_g17(worst) + ", 5 field-coupled " +
               fmt_g17(worst_global) + " (<= 1e-8)");
}

// ---- criteria 6-8: accuracy, stability, horizon (shared pipeline) -------------

struct PipelineOut {
    std::map<std::string, RolloutReport> rep;
};

const RolloutReport& get_report(const PipelineOut& po, const std::string& name) {
    const auto it = po.rep.find(name);
    if (it == po.rep.end()) throw ConfigError("pipeline: missing report " + name);
    return it->second;
}

PipelineOut run_pipeline() {
    RunConfig cfg; // defaults throughout: K=J=4, F=20, 4000/1000 snippets, 400 steps
    const ScaleParams p = cfg.params();
    const int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

    Timer t_gen;
    GenStats gs_train, gs_test;
    const Dataset train =
        generate_dataset(p, split_mix(cfg.seed, 0x7261ull), cfg.n_train, cfg.T_steps,
                         cfg.warmup_steps(), kSplitTrain, false, threads, &gs_train);
    const Dataset test =
        generate_dataset(p, split_mix(cfg.seed, 0x7465ull), cfg.n_test, cfg.T_steps,
                         cfg.warmup_steps(), kSplitTest, false, threads, &gs_test);
    info("generated " + std::to_string(cfg.n_train) + "/" + std::to_string(cfg.n_test) +
         " snippets in " + num(t_gen.s()) + " s (retries " +
         std::to_string(gs_train.blowup_retries + gs_test.blowup_retries) + ")");

    Timer t_fno;
    const FnoTrainResult ftr = train_fno(train, cfg.fno(), cfg.fno_train(), false);
    info("operator trained in " + num(t_fno.s()) + " s, offline mse " +
         fmt_g17(fno_offline_mse(cfg.fno(), ftr.params, test)));

    Timer t_res;
    const ResNetTrainResult rtr = fit_resnet(train, cfg.resnet(), cfg.resnet_train(), false);
    info("resnet trained in " + num(t_res.s()) + " s, offline mse " +
         fmt_g17(resnet_offline_mse(cfg.resnet(), rtr.params, test)));

    const LinearParam lin = fit_linear(train);
    info("linear fit a=" + fmt_g17(lin.a) + " b0=" + fmt_g17(lin.b0) + ", offline mse " +
         fmt_g17(linear_offline_mse(lin, test)));
    const Climatology clim = compute_climatology(train);
    info("climatology mean=" + fmt_g17(clim.mean) + " std=" + fmt_g17(clim.std_dev));

    const int K = static_cast<int>(test.hdr.K);
    const int N = static_cast<int>(test.snippets.size());
    FnoParametrization fpar(cfg.fno(), ftr.params, K, N);
    ResNetParametrization rpar(cfg.resnet(), rtr.params, static_cast<std::size_t>(N) * K);
    LinearParametrization lpar(lin);

    std::vector<MethodSpec> methods;
    methods.push_back({"mno", MethodKind::rollout, &fpar});
    methods.push_back({"resnet", MethodKind::rollout, &rpar});
    methods.push_back({"linear", MethodKind::rollout, &lpar});
    methods.push_back({"climatology", MethodKind::climatology, nullptr});

    Timer t_eval;
    const std::vector<RolloutReport> reports = evaluate_all(test, clim, methods, cfg.eval_cfg());
    info("evaluated " + std::to_string(N) + " members over " +
         std::to_string(cfg.stability_steps) + " steps in " + num(t_eval.s()) + " s");

    PipelineOut po;
    for (const RolloutReport& r : reports) po.rep[r.name] = r;
    for (const RolloutReport& r : reports)
        info(r.name + ": rmse " + num(r.rmse) + ", horizon " + std::to_string(r.horizon_steps) +
             " steps (" + num(r.horizon_mtu) + " mtu), bounded " + num(r.bounded_fraction) +
             ", excluded " + std::to_string(r.n_excluded));
    return po;
}

void criterion_accuracy(const PipelineOut& po) {
    const double clim_rmse = get_report(po, "climatology").rmse;
    const double mno = get_report(po, "mno").rmse;
    const double resnet = get_report(po, "resnet").rmse;
    const double linear = get_report(po, "linear").rmse;

    const double clim_ref = 6.902, mno_ref = 0.5067;
    const bool clim_ok = std::abs(clim_rmse - clim_ref) <= 0.25 * clim_ref;
    const bool order_ok = mno < resnet && resnet < linear && linear < clim_rmse;
    const bool band_ok = mno > 0.0 && mno <= 2.0 * mno_ref;

    report("06 accuracy at reference scale", clim_ok && order_ok && band_ok,
           "climatology rmse " + num(clim_rmse) + " vs " + num(clim_ref) +
               " +-25%; ordering mno " + num(mno) + " < resnet " + num(resnet) + " < linear " +
               num(linear) + " < climatology " + (order_ok ? "holds" : "VIOLATED") +
               "; operator rmse vs " + num(mno_ref) + " +-100% " +
               (band_ok ? "in band" : "OUT OF BAND"));
}

void criterion_stability(const PipelineOut& po) {
    const RolloutReport& mno = get_report(po, "mno");
    const RolloutReport& clim = get_report(po, "climatology");
    const std::size_t T = mno.rmse_t.size();
    // saturation level: climatology rmse_t averaged over the final quarter
    double sat = 0.0;
    const std::size_t q0 = T - T / 4;
    for (std::size_t t = q0; t < T; ++t) sat += clim.rmse_t[t];
    sat /= static_cast<double>(T - q0);
    const double tail = mno.rmse_t.empty() ? 0.0 : mno.rmse_t.back();

    const bool bounded_ok = mno.bounded_fraction >= 0.99;
    const bool plateau_ok = tail <= 1.3 * sat;
    report("07 rollout stability", bounded_ok && plateau_ok,
           "bounded fraction " + num(mno.bounded_fraction) + " (>= 0.99, bound 50, " +
               std::to_string(T) + " steps); rmse_t tail " + num(tail) +
               " <= 1.3 x climatology saturation " + num(sat));
}

void criterion_horizon(const PipelineOut& po) {
    const int h_mno = get_report(po, "mno").horizon_steps;
    const int h_res = get_report(po, "resnet").horizon_steps;
    std::string detail = "operator horizon " + std::to_string(h_mno) + " steps vs resnet " +
                         std::to_string(h_res) + " steps";
    if (h_res > 0)
        detail += " (ratio " + num(static_cast<double>(h_mno) / h_res) +
                  ", reference experiment reports about 2x)";
    report("08 forecast horizon", h_mno >= h_res, detail);
}

// ---- criterion 10: end-to-end reproducibility ---------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void reproducibility_run(const fs::path& dir) {
    fs::create_directories(dir);
    RunConfig c;
    c.n_train = 40;
    c.n_test = 10;
    c.T_steps = 120;
    c.warmup_mtu = 2.0;
    c.fno_n_v = 16;
    c.fno_n_d = 2;
    c.fno_epochs = 1;
    c.fno_lr_decays_per_epoch = 4;
    c.resnet_units = 8;
    c.resnet_blocks = 1;
    c.resnet_epochs = 2;
    c.eval_steps = 60;
    c.stability_steps = 120;
    c.plot_samples = 2;
    const ScaleParams p = c.params();

    const Dataset train = generate_dataset(p, split_mix(c.seed, 0x7261ull), c.n_train, c.T_steps,
                                           c.warmup_steps(), kSplitTrain, false, 2, nullptr);
    const Dataset test = generate_dataset(p, split_mix(c.seed, 0x7465ull), c.n_test, c.T_steps,
                                          c.warmup_steps(), kSplitTest, false, 2, nullptr);
    save_dataset(train, (dir / "train.bin").string());
    save_dataset(test, (dir / "test.bin").string());

    const FnoTrainResult ftr = train_fno(train, c.fno(), c.fno_train(), false);
    save_fno(c.fno(), ftr.params, (dir / "fno.bin").string());
    const ResNetTrainResult rtr = fit_resnet(train, c.resnet(), c.resnet_train(), false);
    save_resnet(c.resnet(), rtr.params, (dir / "resnet.bin").string());
    const LinearParam lin = fit_linear(train);
    save_linear(lin, (dir / "linear.bin").string());
    const Climatology clim = compute_climatology(train);
    save_climatology(clim, (dir / "climatology.bin").string());

    const int K = static_cast<int>(test.hdr.K);
    const int N = static_cast<int>(test.snippets.size());
    FnoParametrization fpar(c.fno(), ftr.params, K, N);
    ResNetParametrization rpar(c.resnet(), rtr.params, static_cast<std::size_t>(N) * K);
    LinearParametrization lpar(lin);
    std::vector<MethodSpec> methods;
    methods.push_back({"mno", MethodKind::rollout, &fpar});
    methods.push_back({"resnet", MethodKind::rollout, &rpar});
    methods.push_back({"linear", MethodKind::rollout, &lpar});
    methods.push_back({"climatology", MethodKind::climatology, nullptr});
    const std::vector<RolloutReport> reports = evaluate_all(test, clim, methods, c.eval_cfg());

    {
        CsvWriter w((dir / "summary.csv").string());
        w.row({"method", "rmse", "horizon_steps", "horizon_mtu", "bounded_fraction",
               "n_excluded"});
        for (const RolloutReport& r : reports)
            w.row({r.name, fmt_g17(r.rmse), std::to_string(r.horizon_steps),
                   fmt_g17(r.horizon_mtu), fmt_g17(r.bounded_fraction),
                   std::to_string(r.n_excluded)});
    }
    {
        CsvWriter w((dir / "rmse_t.csv").string());
        std::vector<std::string> head{"t"};
        for (const RolloutReport& r : reports) head.push_back(r.name);
        w.row(head);
        const std::size_t T = reports.empty() ? 0 : reports[0].rmse_t.size();
        for (std::size_t t = 0; t < T; ++t) {
            std::vector<std::string> row{std::to_string(t)};
            for (const RolloutReport& r : reports) row.push_back(fmt_g17(r.rmse_t[t]));
            w.row(row);
        }
    }
}

void criterion_reproducibility(const fs::path& work) {
    Timer timer;
    const fs::path a = work / "repro_a", b = work / "repro_b";
    fs::remove_all(a);
    fs::remove_all(b);
    reproducibility_run(a);
    reproducibility_run(b);

    const char* files[] = {"train.bin",  "test.bin",        "fno.bin",     "resnet.bin",
                           "linear.bin", "climatology.bin", "summary.csv", "rmse_t.csv"};
    std::string mismatches;
    for (const char* f : files)
        if (slurp(a / f) != slurp(b / f)) mismatches += std::string(" ") + f;
    report("10 reproducibility", mismatches.empty(),
           mismatches.empty()
               ? std::string("datasets, weights, and metric csvs byte-identical across reruns (") +
                     num(timer.s()) + " s)"
               : "files differ:" + mismatches);
}

// ---- criterion 9: one-step runtime scaling -------------------------------------

void criterion_complexity(const fs::path& work) {
    Timer timer;
    RunConfig cfg;
    const ScaleParams base = cfg.params();
    const BenchConfig bc = cfg.bench_cfg();
    info("sweep K = 2^" + std::to_string(bc.k_log2_min) + " .. 2^" +
         std::to_string(bc.k_log2_max_dns) + " (full system) / 2^" +
         std::to_string(bc.k_log2_max_mno) + " (operator), budget " + num(bc.point_budget_s) +
         " s per point");

    const SweepResult sweep = bench_sweep(base, bc, true);
    fs::create_directories(work);
    write_bench_csv((work / "bench.csv").string(), sweep);
    write_skip_log((work / "bench_skipped.csv").string(), sweep);
    info("records " + std::to_string(sweep.records.size()) + ", skipped " +
         std::to_string(sweep.skipped.size()) + " (see " + (work / "bench.csv").string() + ")");
    for (const SkipRecord& s : sweep.skipped)
        info("skipped " + s.method + " K=2^" + std::to_string(s.log2_k) + ": " + s.reason);

    bool dns_ok = false, mno_ok = false, ratio_ok = false;
    std::string detail;

    try {
        const ScalingFit f = fit_scaling(sweep.records, "dns", bc.knee_log2);
        dns_ok = f.slope >= 1.8 && f.slope <= 2.2;
        detail += "dns slope " + num(f.slope) + " (n=" + std::to_string(f.n) + ", want [1.8,2.2])";
    } catch (const Error& e) {
        detail += std::string("dns slope unavailable (") + e.what() + ")";
    }
    try {
        const ScalingFit f = fit_scaling(sweep.records, "mno", bc.knee_log2);
        mno_ok = f.slope >= 0.9 && f.slope <= 1.35;
        detail += "; mno slope " + num(f.slope) + " (n=" + std::to_string(f.n) +
                  ", want [0.9,1.35])";
    } catch (const Error& e) {
        detail += std::string("; mno slope unavailable (") + e.what() + ")";
    }

    const BenchRecord* dns15 = nullptr;
    const BenchRecord* mno15 = nullptr;
    for (const BenchRecord& r : sweep.records) {
        if (r.log2_k != 15) continue;
        if (r.method == "dns") dns15 = &r;
        if (r.method == "mno") mno15 = &r;
    }
    if (dns15 && mno15 && mno15->best_ns > 0.0) {
        const double ratio = dns15->best_ns / mno15->best_ns;
        ratio_ok = ratio >= 100.0;
        detail += "; ratio at 2^15 = " + num(ratio) + " (want >= 100)";
    } else {
        detail += "; ratio at 2^15 unavailable (full system exceeds this host's memory)";
        // supplementary: extrapolate the full-system cost from the widest fit we have
        try {
            const ScalingFit fd = fit_scaling(sweep.records, "dns", 10);
            if (mno15 && mno15->best_ns > 0.0) {
                const double dns_extrap = std::exp2(fd.intercept + fd.slope * 15.0);
                info("supplementary: dns fit from 2^10 gives slope " + num(fd.slope) +
                     ", extrapolated 2^15 step " + num(dns_extrap * 1e-6) + " ms, ratio " +
                     num(dns_extrap / mno15->best_ns));
            }
        } catch (const Error& e) {
            info(std::string("supplementary dns fit unavailable: ") + e.what());
        }
    }

    detail += "; sweep " + num(timer.s()) + " s";
    report("09 runtime scaling", dns_ok && mno_ok && ratio_ok, detail);
}

} // namespace

int main(int argc, char** argv) {
    const std::string group = argc > 1 ? argv[1] : "all";
    if (group != "fast" && group != "pipeline" && group != "complexity" && group != "all") {
        std::fprintf(stderr, "usage: acceptance [fast|pipeline|complexity|all]\n");
        return 64;
    }
    const fs::path work = fs::temp_directory_path() / "mno_acceptance";

    auto guarded = [](const char* id, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            report(id, false, std::string("exception: ") + e.what());
        }
    };

    if (group == "fast" || group == "all") {
        guarded("01 subgrid target identity", [] { criterion_target_identity(); });
        guarded("02 rk4 convergence order", [] { criterion_rk4_order(); });
        guarded("03 spectral kernel", [] { criterion_spectral(); });
        guarded("04 gradient suite", [] { criterion_gradients(); });
        guarded("05 linear baseline vs qr oracle", [] { criterion_linear_oracle(); });
    }
    if (group == "pipeline" || group == "all") {
        try {
            const PipelineOut po = run_pipeline();
            guarded("06 accuracy at reference scale", [&] { criterion_accuracy(po); });
            guarded("07 rollout stability", [&] { criterion_stability(po); });
            guarded("08 forecast horizon", [&] { criterion_horizon(po); });
        } catch (const std::exception& e) {
            report("06 accuracy at reference scale", false,
                   std::string("pipeline failed: ") + e.what());
            report("07 rollout stability", false, "pipeline failed");
            report("08 forecast horizon", false, "pipeline failed");
        }
        guarded("10 reproducibility", [&] { criterion_reproducibility(work); });
    }
    if (group == "complexity" || group == "all") {
        guarded("09 runtime scaling", [&] { criterion_complexity(work); });
    }

    if (g_failures == 0)
        std::printf("acceptance (%s): all criteria passed\n", group.c_str());
    else
        std::printf("acceptance (%s): %d criteria FAILED\n", group.c_str(), g_failures);
    return g_failures;
}
