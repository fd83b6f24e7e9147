#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "mno/mno.hpp"

// Drives the installed binary end to end through std::system; every artifact
// is inspected back through the library loaders.

namespace fs = std::filesystem;
using namespace mno;

namespace {

const fs::path kWork = fs::temp_directory_path() / "mno_cli_work";

struct Result {
    int code = -1;
    std::string output; // stdout and stderr combined
};

Result run_cli(const std::string& args) {
    static int counter = 0;
    const std::string log = (kWork / ("log_" + std::to_string(counter++) + ".txt")).string();
    const std::string cmd = std::string(MNO_CLI_PATH) + " " + args + " >" + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    Result r;
    if (WIFEXITED(status)) r.code = WEXITSTATUS(status);
    std::ifstream in(log, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    r.output = buf.str();
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string wp(const std::string& name) { return (kWork / name).string(); }

// small, fast runs: 10 warmup steps, short snippets
const std::string kGenFlags =
    " --set warmup_mtu=0.05 --set T_steps=30 --set n_test=2 --set n_train=3"
    " --set gen_threads=1";

void ensure_workdir() {
    static bool done = false;
    if (!done) {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        done = true;
    }
}

} // namespace

TEST_CASE("usage errors exit with code 1") {
    ensure_workdir();
    CHECK(run_cli("").code != 0);
    CHECK(run_cli("frobnicate").code == 1);
    CHECK(run_cli("generate").code == 1); // --out is required
    CHECK(run_cli("generate --help").code == 0);

    const Result unknown_key =
        run_cli("generate --out " + wp("x.bin") + " --set no_such_key=3" + kGenFlags);
    CHECK(unknown_key.code == 1);
    CHECK(unknown_key.output.find("unknown config key") != std::string::npos);

    CHECK(run_cli("generate --out " + wp("x.bin") + " --set K" + kGenFlags).code == 1);
    CHECK(run_cli("generate --out " + wp("x.bin") + " --set K=abc" + kGenFlags).code == 1);
    CHECK(run_cli("train --data nope.bin --method foo --out " + wp("m.bin")).code == 1);
}

TEST_CASE("generate writes a loadable dataset with csv and sidecar") {
    ensure_workdir();
    const std::string out = wp("gen_smoke.bin");
    const Result r =
        run_cli("generate --split test --out " + out + " --csv --seed 7" + kGenFlags);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("wrote") != std::string::npos);

    const Dataset ds = load_dataset(out);
    CHECK(ds.hdr.n_snippets == 2);
    CHECK(ds.hdr.T == 30);
    CHECK(ds.hdr.K == 4);
    CHECK(ds.hdr.split_tag == kSplitTest);
    CHECK(ds.snippets.size() == 2);

    const CsvTable t = read_csv(out + ".csv");
    CHECK(t.header[0] == "snippet_id");
    CHECK(t.rows.size() == 2 * 30);

    RunConfig side;
    load_config(side, out + ".resolved.cfg");
    CHECK(side.seed == 7);
    CHECK(side.T_steps == 30);
    CHECK(side.n_test == 2);
}

TEST_CASE("generate reruns and sidecar replays are byte-identical") {
    ensure_workdir();
    const std::string a = wp("rep_a.bin"), b = wp("rep_b.bin"), c = wp("rep_c.bin");
    REQUIRE(run_cli("generate --split test --out " + a + " --seed 3" + kGenFlags).code == 0);
    REQUIRE(run_cli("generate --split test --out " + b + " --seed 3" + kGenFlags).code == 0);
    CHECK(slurp(a) == slurp(b));

    // the resolved sidecar alone reproduces the dataset
    REQUIRE(run_cli("generate --split test --out " + c + " --config " + a + ".resolved.cfg")
                .code == 0);
    CHECK(slurp(a) == slurp(c));

    // --seed wins over --set seed
    const std::string d = wp("rep_d.bin"), e = wp("rep_e.bin");
    REQUIRE(
        run_cli("generate --split test --out " + d + " --set seed=5 --seed 3" + kGenFlags).code ==
        0);
    CHECK(slurp(a) == slurp(d));
    REQUIRE(run_cli("generate --split test --out " + e + " --set seed=5" + kGenFlags).code == 0);
    CHECK(slurp(a) != slurp(e));
}

TEST_CASE("every training method produces a loadable model") {
    ensure_workdir();
    const std::string data = wp("train_ds.bin");
    REQUIRE(run_cli("generate --split train --out " + data + " --seed 11" + kGenFlags).code == 0);

    const std::string tiny_fno =
        " --set fno_n_v=8 --set fno_n_d=2 --set fno_k_max=2 --set fno_epochs=1"
        " --set fno_lr_decays_per_epoch=1";

    SECTION("fno, deterministic across reruns") {
        const std::string m1 = wp("m_fno1.bin"), m2 = wp("m_fno2.bin");
        const Result r =
            run_cli("train --data " + data + " --method fno --out " + m1 + " --seed 11" +
                    tiny_fno);
        REQUIRE(r.code == 0);
        CHECK(r.output.find("final_offline_mse") != std::string::npos);
        const LoadedModel m = load_model(m1);
        CHECK(m.type == io::ModelType::fno);
        CHECK(m.fno_cfg.n_v == 8);

        const CsvTable loss = read_csv(m1 + ".loss.csv");
        CHECK(loss.header == std::vector<std::string>({"step", "lr", "mse"}));
        CHECK(!loss.rows.empty());

        REQUIRE(run_cli("train --data " + data + " --method fno --out " + m2 + " --seed 11" +
                        tiny_fno)
                    .code == 0);
        CHECK(slurp(m1) == slurp(m2));
    }

    SECTION("linear local and global") {
        const std::string ml = wp("m_lin.bin");
        const Result r = run_cli("train --data " + data + " --method linear --out " + ml);
        REQUIRE(r.code == 0);
        CHECK(r.output.find("offline_mse") != std::string::npos);
        CHECK(load_model(ml).type == io::ModelType::linear);
        CHECK_FALSE(load_model(ml).linear.global);

        const std::string mg = wp("m_ling.bin");
        REQUIRE(run_cli("train --data " + data + " --method linear --out " + mg +
                        " --set linear_global=true")
                    .code == 0);
        CHECK(load_model(mg).linear.global);
    }

    SECTION("resnet and climatology") {
        const std::string mr = wp("m_res.bin");
        REQUIRE(run_cli("train --data " + data + " --method resnet --out " + mr +
                        " --seed 11 --set resnet_units=4 --set resnet_blocks=1"
                        " --set resnet_epochs=1")
                    .code == 0);
        CHECK(load_model(mr).type == io::ModelType::resnet);

        const std::string mc = wp("m_clim.bin");
        const Result r = run_cli("train --data " + data + " --method climatology --out " + mc);
        REQUIRE(r.code == 0);
        CHECK(r.output.find("climatology mean=") != std::string::npos);
        CHECK(load_model(mc).type == io::ModelType::climatology);
    }

    SECTION("missing dataset is a runtime failure") {
        CHECK(run_cli("train --data " + wp("absent.bin") + " --method linear --out " +
                      wp("m_x.bin"))
                  .code == 2);
    }
}

TEST_CASE("evaluate rolls models out and writes reports") {
    ensure_workdir();
    const std::string data = wp("eval_ds.bin");
    const std::string train_data = wp("eval_train_ds.bin");
    REQUIRE(run_cli("generate --split test --out " + data + " --seed 21" + kGenFlags).code == 0);
    REQUIRE(run_cli("generate --split train --out " + train_data + " --seed 21" + kGenFlags)
                .code == 0);

    const std::string mc = wp("e_clim.bin"), ml = wp("e_lin.bin");
    REQUIRE(run_cli("train --data " + train_data + " --method climatology --out " + mc).code ==
            0);
    REQUIRE(run_cli("train --data " + train_data + " --method linear --out " + ml).code == 0);

    const std::string eval_flags =
        " --set eval_steps=20 --set stability_steps=30 --set plot_samples=1";

    SECTION("with climatology and truth") {
        const std::string out_dir = wp("evaldir");
        const Result r = run_cli("evaluate --data " + data + " --models " + mc + " " + ml +
                                 " --out " + out_dir + " --truth" + eval_flags);
        REQUIRE(r.code == 0);

        const CsvTable sum = read_csv(out_dir + "/summary.csv");
        REQUIRE(sum.header ==
                std::vector<std::string>({"method", "rmse", "horizon_steps", "horizon_mtu",
                                          "bounded_fraction", "n_excluded"}));
        REQUIRE(sum.rows.size() == 3);
        bool saw_clim = false, saw_lin = false, saw_truth = false;
        for (const auto& row : sum.rows) {
            if (row[0] == "climatology") saw_clim = true;
            if (row[0] == "linear") saw_lin = true;
            if (row[0] == "truth") {
                saw_truth = true;
                CHECK(csv_num(row[sum.col("rmse")], "rmse") == 0.0);
                CHECK(csv_num(row[sum.col("bounded_fraction")], "bf") == 1.0);
            }
        }
        CHECK(saw_clim);
        CHECK(saw_lin);
        CHECK(saw_truth);

        const CsvTable rt = read_csv(out_dir + "/rmse_t.csv");
        CHECK(rt.rows.size() == 30);
        CHECK(rt.header.size() == 2 + 3);

        CHECK(read_csv(out_dir + "/ensemble.csv").rows.size() == 30);
        CHECK(!read_csv(out_dir + "/trajectories.csv").rows.empty());

        const std::string svg = slurp(out_dir + "/rmse_t.svg");
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("polyline") != std::string::npos);
        CHECK(fs::exists(out_dir + "/trajectory.svg"));
        CHECK(fs::exists(out_dir + "/config.resolved.cfg"));
    }

    SECTION("refuses to run without a climatology reference") {
        const Result r = run_cli("evaluate --data " + data + " --models " + ml + " --out " +
                                 wp("evaldir2") + eval_flags);
        CHECK(r.code == 1);
        CHECK(r.output.find("climatology") != std::string::npos);
    }

    SECTION("missing weight file is a runtime failure") {
        CHECK(run_cli("evaluate --data " + data + " --models " + mc + " " + wp("ghost.bin") +
                      " --out " + wp("evaldir3") + eval_flags)
                  .code == 2);
    }
}

TEST_CASE("plot renders csv input to svg") {
    ensure_workdir();
    const std::string csv = wp("toy.csv");
    {
        std::ofstream out(csv);
        out << "t,alpha,beta\n0,1,2\n1,2,3\n2,4,5\n";
    }
    const std::string svg_path = wp("toy.svg");
    const Result r = run_cli("plot --in " + csv + " --out " + svg_path + " --title demo");
    REQUIRE(r.code == 0);
    const std::string svg = slurp(svg_path);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK(svg.find("alpha") != std::string::npos);
    CHECK(svg.find("demo") != std::string::npos);

    CHECK(run_cli("plot --in " + wp("absent.csv") + " --out " + wp("x.svg")).code == 2);
}
