#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include "blockgcl/graph.hpp"
#include "blockgcl/report.hpp"
#include "support.hpp"

using namespace blockgcl;
using doctest::Contains;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CliResult run_cli(const std::string& args) {
    static const std::string scratch = testsupport::make_temp_dir("cli_io");
    static int counter = 0;
    const std::string out_path = scratch + "/out" + std::to_string(counter) + ".txt";
    const std::string err_path = scratch + "/err" + std::to_string(counter) + ".txt";
    ++counter;
    const std::string cmd =
        std::string(BLOCKGCL_CLI_PATH) + " " + args + " >" + out_path + " 2>" + err_path;
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

/// One generated dataset plus a ready-to-run training config, shared by tests.
struct Fixture {
    std::string root;
    std::string dataset_dir;
    std::string config_path;

    Fixture() {
        root = testsupport::make_temp_dir("cli_fixture");
        dataset_dir = root + "/toy";
        const auto gen = run_cli("gen-synthetic --blocks 2 --nodes-per-block 20 --p-in 0.4 "
                                 "--p-out 0.05 --feature-dim 6 --seed 3 --out " + dataset_dir);
        REQUIRE(gen.code == 0);
        config_path = root + "/run.cfg";
        std::ofstream cfg(config_path);
        cfg << "dataset = " << dataset_dir << "\n"
            << "depth = 2\n"
            << "block_size = 1\n"
            << "hidden_dim = 8\n"
            << "epochs = 3\n"
            << "probe_repeats = 2\n"
            << "p_edge_drop = 0.2\n"
            << "p_feat_mask = 0.1\n"
            << "seed = 5\n";
        cfg.close();
    }
};

Fixture& fixture() {
    static Fixture f;
    return f;
}

} // namespace

TEST_CASE("the binary demands a subcommand") {
    const auto r = run_cli("");
    CHECK(r.code == 2);
}

TEST_CASE("gen-synthetic emits a loadable dataset") {
    auto& f = fixture();
    const GraphDataset g = load_dataset(f.dataset_dir);
    CHECK(g.num_nodes == 40);
    CHECK(g.num_classes == 2);
    CHECK(g.num_features == 6);
    g.validate();
}

TEST_CASE("train writes the full artifact set and is byte-reproducible") {
    auto& f = fixture();
    const std::string out1 = f.root + "/run1";
    const std::string out2 = f.root + "/run2";

    const auto r1 = run_cli("train --config " + f.config_path + " --out " + out1);
    CAPTURE(r1.err);
    REQUIRE(r1.code == 0);
    CHECK(r1.out.find("acc_mean=") != std::string::npos);

    for (const char* name : {"losses.csv", "mad.csv", "probe.csv", "summary.csv", "checkpoint.bgck"})
        CHECK(std::filesystem::exists(std::filesystem::path(out1) / name));

    const auto r2 = run_cli("train --config " + f.config_path + " --out " + out2);
    REQUIRE(r2.code == 0);
    for (const char* name : {"mad.csv", "probe.csv", "summary.csv", "checkpoint.bgck"}) {
        CAPTURE(name);
        CHECK(slurp(out1 + "/" + name) == slurp(out2 + "/" + name));
    }

    // losses.csv carries wall-clock timings: same loss columns, no byte contract
    const CsvTable losses = CsvTable::read_file(out1 + "/losses.csv");
    CHECK(losses.columns == std::vector<std::string>{"epoch", "block", "loss", "wall_ms"});
    CHECK(losses.rows.size() == 6); // 3 epochs x 2 blocks

    const CsvTable summary = CsvTable::read_file(out1 + "/summary.csv");
    REQUIRE(summary.rows.size() == 1);
    CHECK(summary.rows[0][summary.column("status").value()] == "ok");

    SUBCASE("the seed override changes the outcome") {
        const std::string out3 = f.root + "/run3";
        const auto r3 = run_cli("train --config " + f.config_path + " --seed 99 --out " + out3);
        REQUIRE(r3.code == 0);
        CHECK(slurp(out1 + "/checkpoint.bgck") != slurp(out3 + "/checkpoint.bgck"));
    }
}

TEST_CASE("config mistakes exit with code 2 and a pointed message") {
    auto& f = fixture();
    SUBCASE("invalid depth") {
        const std::string path = f.root + "/bad_depth.cfg";
        std::ofstream cfg(path);
        cfg << "dataset = " << f.dataset_dir << "\ndepth = 0\n";
        cfg.close();
        const auto r = run_cli("train --config " + path + " --out " + f.root + "/x");
        CHECK(r.code == 2);
        CHECK(r.err.find("depth") != std::string::npos);
    }
    SUBCASE("unknown key") {
        const std::string path = f.root + "/bad_key.cfg";
        std::ofstream cfg(path);
        cfg << "dataset = " << f.dataset_dir << "\nblok_size = 2\n";
        cfg.close();
        const auto r = run_cli("train --config " + path + " --out " + f.root + "/x");
        CHECK(r.code == 2);
        CHECK(r.err.find("blok_size") != std::string::npos);
    }
    SUBCASE("missing dataset directory") {
        const std::string path = f.root + "/bad_data.cfg";
        std::ofstream cfg(path);
        cfg << "dataset = " << f.root << "/no_such_dir\n";
        cfg.close();
        const auto r = run_cli("train --config " + path + " --out " + f.root + "/x");
        CHECK(r.code == 2);
        CHECK(r.err.find("no_such_dir") != std::string::npos);
    }
    SUBCASE("missing config file") {
        const auto r = run_cli("train --config " + f.root + "/absent.cfg --out " + f.root + "/x");
        CHECK(r.code == 2);
    }
}

TEST_CASE("mad and probe rerun from a saved checkpoint") {
    auto& f = fixture();
    const std::string run_dir = f.root + "/for_ckpt";
    REQUIRE(run_cli("train --config " + f.config_path + " --out " + run_dir).code == 0);
    const std::string ckpt = run_dir + "/checkpoint.bgck";

    SUBCASE("mad profile") {
        const std::string out = f.root + "/mad_out";
        const auto r = run_cli("mad --checkpoint " + ckpt + " --dataset " + f.dataset_dir +
                               " --out " + out);
        CAPTURE(r.err);
        REQUIRE(r.code == 0);
        const CsvTable table = CsvTable::read_file(out + "/mad.csv");
        CHECK(table.columns == std::vector<std::string>{"layer", "mad"});
        CHECK(table.rows.size() == 2); // depth 2
    }
    SUBCASE("probe") {
        const std::string out = f.root + "/probe_out";
        const auto r = run_cli("probe --checkpoint " + ckpt + " --dataset " + f.dataset_dir +
                               " --repeats 2 --seed 1 --out " + out);
        CAPTURE(r.err);
        REQUIRE(r.code == 0);
        const CsvTable table = CsvTable::read_file(out + "/probe.csv");
        CHECK(table.columns == std::vector<std::string>{"repeat", "accuracy"});
        CHECK(table.rows.size() == 2);
    }
    SUBCASE("corrupt checkpoint exits 1") {
        const std::string broken = f.root + "/broken.bgck";
        std::ofstream out(broken, std::ios::binary);
        out << "not a checkpoint";
        out.close();
        const auto r = run_cli("mad --checkpoint " + broken + " --dataset " + f.dataset_dir +
                               " --out " + f.root + "/x");
        CHECK(r.code == 1);
    }
}

TEST_CASE("sweep renders a deterministic grid table") {
    auto& f = fixture();
    const std::string cfg_path = f.root + "/sweep.cfg";
    std::ofstream cfg(cfg_path);
    cfg << "datasets = " << f.dataset_dir << "\n"
        << "modes = blockwise, end2end\n"
        << "depths = 2\n"
        << "block_sizes = 1, 4\n" // 4 > depth: cell skipped
        << "runs = 2\n"
        << "hidden_dim = 8\n"
        << "epochs = 2\n"
        << "p_edge_drop = 0.2\n"
        << "p_feat_mask = 0.1\n";
    cfg.close();

    const std::string out1 = f.root + "/sweep1";
    const auto r1 = run_cli("sweep --config " + cfg_path + " --workers 2 --out " + out1);
    CAPTURE(r1.err);
    REQUIRE(r1.code == 0);

    const CsvTable table = CsvTable::read_file(out1 + "/results.csv");
    CHECK(table.columns == std::vector<std::string>{"dataset", "mode", "depth", "block_size",
                                                    "acc_mean", "acc_std",
                                                    "final_mad_last_layer", "status"});
    // blockwise L=2 bs=1 plus the single end2end L=2 cell; bs=4 dropped
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0][1] == "blockwise");
    CHECK(table.rows[0][3] == "1");
    CHECK(table.rows[1][1] == "end2end");
    CHECK(table.rows[1][3] == "2");
    for (const auto& row : table.rows) CHECK(row[7] == "ok");

    const std::string out2 = f.root + "/sweep2";
    REQUIRE(run_cli("sweep --config " + cfg_path + " --workers 1 --out " + out2).code == 0);
    CHECK(slurp(out1 + "/results.csv") == slurp(out2 + "/results.csv"));
}

TEST_CASE("plot renders SVG charts from result tables") {
    auto& f = fixture();
    const std::string run_dir = f.root + "/for_plot";
    REQUIRE(run_cli("train --config " + f.config_path + " --out " + run_dir).code == 0);

    SUBCASE("mad-layers") {
        const std::string svg = f.root + "/mad.svg";
        const auto r = run_cli("plot --input " + run_dir + "/mad.csv --kind mad-layers --out " + svg);
        CAPTURE(r.err);
        REQUIRE(r.code == 0);
        const std::string content = slurp(svg);
        CHECK(content.find("<svg") != std::string::npos);
        CHECK(content.find("MAD") != std::string::npos);
    }
    SUBCASE("depth-accuracy from a summary table") {
        const std::string svg = f.root + "/acc.svg";
        const auto r = run_cli("plot --input " + run_dir + "/summary.csv --kind depth-accuracy --out " + svg);
        CAPTURE(r.err);
        REQUIRE(r.code == 0);
        CHECK(slurp(svg).find("accuracy vs depth") != std::string::npos);
    }
    SUBCASE("unknown kind exits 2") {
        const auto r = run_cli("plot --input " + run_dir + "/mad.csv --kind pie --out " + f.root + "/p.svg");
        CHECK(r.code == 2);
        CHECK(r.err.find("pie") != std::string::npos);
    }
    SUBCASE("missing columns exit 2") {
        const auto r = run_cli("plot --input " + run_dir + "/mad.csv --kind depth-accuracy --out " +
                               f.root + "/p.svg");
        CHECK(r.code == 2);
    }
}

TEST_CASE("the bundled demo dataset and config run out of the box") {
    const std::string out_dir = testsupport::make_temp_dir("cli_bundled");
    const std::string cmd = std::string("cd ") + BLOCKGCL_REPO_DIR + " && " + BLOCKGCL_CLI_PATH +
                            " train --config configs/demo.cfg --out " + out_dir +
                            " >/dev/null 2>&1";
    REQUIRE(WEXITSTATUS(std::system(cmd.c_str())) == 0);
    for (const char* name : {"/summary.csv", "/mad.csv", "/probe.csv", "/losses.csv"})
        CHECK(!slurp(out_dir + name).empty());
    CHECK(slurp(out_dir + "/summary.csv").find("demo") != std::string::npos);
}
