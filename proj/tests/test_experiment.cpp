#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "srl/experiment.hpp"

using namespace srl;
namespace fs = std::filesystem;

namespace {

/// Small blobs problem that every pipeline can chew through in milliseconds:
/// 32 samples (16/8/8 split), a 2-4-2 net, 3-epoch Stop-E, PGD-2 attacks.
ExperimentConfig tiny_cfg(const std::string& pipeline, const std::string& out) {
    ExperimentConfig cfg;
    cfg.pipeline = pipeline;
    cfg.dataset = "blobs";
    cfg.dataset_n = 32;
    cfg.dataset_noise = 0.3;
    cfg.dataset_seed = 5;
    cfg.dims = {2, 4, 2};
    cfg.train.mode = StopMode::kStopE;
    cfg.train.total_epochs = 3;
    cfg.train.batch_size = 8;
    cfg.train.attack.epsilon = 0.1;
    cfg.train.attack.step_size = 0.05;
    cfg.train.attack.iterations = 2;
    cfg.eval_iters = 3;
    cfg.distortion_eps_max = 0.5;
    cfg.distortion_resolution = 0.01;
    cfg.hist_bins = 8;
    cfg.seeds = {0};
    cfg.out_dir = out;
    return cfg;
}

std::size_t count_lines(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::size_t n = 0;
    std::string line;
    while (std::getline(in, line)) ++n;
    return n;
}

Histogram tiny_hist(std::vector<std::size_t> counts) {
    Histogram h;
    h.lo = 0.0;
    h.hi = 1.0;
    h.counts = std::move(counts);
    h.underflow = 1;
    h.overflow = 2;
    h.masked = 3;
    h.total = 6;
    for (std::size_t c : h.counts) h.total += c;
    return h;
}

ArmRecord make_arm(const std::string& name, double clean, double adv,
                   std::optional<double> dist, double l1, double l2,
                   std::vector<std::size_t> counts) {
    ArmRecord a;
    a.name = name;
    a.clean_acc = clean;
    a.adv_acc = adv;
    a.mean_distortion = dist;
    a.l1_norm = l1;
    a.l2_norm = l2;
    a.hist = tiny_hist(std::move(counts));
    return a;
}

}  // namespace

TEST_CASE("csv writers lay out one row per record entry", "[experiment]") {
    SECTION("history") {
        ExperimentRecord rec;
        EpochRow r0;
        r0.epoch = 0;
        r0.lr = 0.1;
        r0.train_adv_loss = 1.5;
        r0.val_loss = 1.25;
        r0.clean_acc = 0.5;
        r0.adv_acc = 0.25;
        EpochRow r1 = r0;
        r1.epoch = 1;
        r1.lr = 0.01;
        rec.rows = {r0, r1};
        CsvTable t = history_csv(rec);
        REQUIRE(t.header == std::vector<std::string>{"epoch", "lr", "train_adv_loss", "val_loss",
                                                    "clean_acc", "adv_acc"});
        REQUIRE(t.rows.size() == 2);
        REQUIRE(t.rows[0][0] == "0");
        REQUIRE(t.rows[0][1] == csv_num(0.1));
        REQUIRE(t.rows[1][1] == csv_num(0.01));
        REQUIRE(t.rows[1][4] == csv_num(0.5));
    }
    SECTION("iterations") {
        IterationRow r;
        r.iteration = 2;
        r.cumulative_ratio = 37.5;
        r.post_train_clean_acc = 0.75;
        r.post_train_adv_acc = 0.5;
        CsvTable t = iterations_csv({r});
        REQUIRE(t.header.size() == 4);
        REQUIRE(t.rows.size() == 1);
        REQUIRE(t.rows[0][0] == "2");
        REQUIRE(t.rows[0][1] == csv_num(37.5));
    }
    SECTION("distortion NA for unbounded rows") {
        DistortionReport rep;
        DistortionRow a;
        a.sample_index = 0;
        a.clean_correct = true;
        a.bound = 0.25;
        DistortionRow b;
        b.sample_index = 1;
        b.clean_correct = false;
        b.bound = std::nullopt;
        rep.rows = {a, b};
        CsvTable t = distortion_csv(rep);
        REQUIRE(t.rows.size() == 2);
        REQUIRE(t.rows[0][1] == "1");
        REQUIRE(t.rows[0][2] == csv_num(0.25));
        REQUIRE(t.rows[1][1] == "0");
        REQUIRE(t.rows[1][2] == "NA");
    }
    SECTION("sparsity appends a global row") {
        Rng rng(31);
        Network net = oracle::random_network(rng, 4, 3);
        CsvTable t = sparsity_csv(sparsity_report(net, nullptr));
        REQUIRE(t.header.size() == 8);
        REQUIRE(t.rows.size() == net.weights.size() + 1);
        REQUIRE(t.rows.front()[0] == "1");
        REQUIRE(t.rows.back()[0] == "global");
    }
    SECTION("histogram rows cover underflow, bins, overflow, masked") {
        Histogram h = tiny_hist({4, 7});
        CsvTable t = histogram_csv(h);
        REQUIRE(t.rows.size() == 2 + 3);
        REQUIRE(t.rows.front()[0] == "underflow");
        REQUIRE(t.rows.front()[3] == "1");
        REQUIRE(t.rows[1][0] == "bin");
        REQUIRE(t.rows[1][1] == csv_num(0.0));
        REQUIRE(t.rows[1][3] == "4");
        REQUIRE(t.rows[2][3] == "7");
        REQUIRE(t.rows[3][0] == "overflow");
        REQUIRE(t.rows.back()[0] == "masked");
        REQUIRE(t.rows.back()[3] == "3");
    }
}

TEST_CASE("compare_report computes b-minus-a deltas over shared bins", "[experiment]") {
    ArmRecord a = make_arm("base", 0.8, 0.6, 0.20, 10.0, 4.0, {5, 1});
    ArmRecord b = make_arm("cand", 0.9, 0.5, 0.35, 7.0, 3.0, {2, 4});

    SECTION("deltas and table layout") {
        CompareReport r = compare_report(a, b);
        REQUIRE(r.delta_clean == Catch::Approx(0.1));
        REQUIRE(r.delta_adv == Catch::Approx(-0.1));
        REQUIRE(r.delta_distortion);
        REQUIRE(*r.delta_distortion == Catch::Approx(0.15));
        REQUIRE(r.delta_l1 == Catch::Approx(-3.0));
        REQUIRE(r.delta_l2 == Catch::Approx(-1.0));
        REQUIRE(r.metrics.header == std::vector<std::string>{"metric", "base", "cand", "delta"});
        REQUIRE(r.metrics.rows.size() == 5);
        REQUIRE(r.histogram_overlay.header.back() == "count_cand");
        REQUIRE(r.histogram_overlay.rows.size() == 2 + 3);
        REQUIRE(r.histogram_overlay.rows[1][3] == "5");
        REQUIRE(r.histogram_overlay.rows[1][4] == "2");
    }
    SECTION("identical arms give exactly zero deltas") {
        CompareReport r = compare_report(a, a);
        REQUIRE(r.delta_clean == 0.0);
        REQUIRE(r.delta_adv == 0.0);
        REQUIRE(r.delta_distortion);
        REQUIRE(*r.delta_distortion == 0.0);
        REQUIRE(r.delta_l1 == 0.0);
        REQUIRE(r.delta_l2 == 0.0);
    }
    SECTION("missing distortion on either side leaves the delta empty") {
        ArmRecord c = b;
        c.mean_distortion = std::nullopt;
        CompareReport r = compare_report(a, c);
        REQUIRE_FALSE(r.delta_distortion);
        REQUIRE(r.metrics.rows[2][2] == "NA");
        REQUIRE(r.metrics.rows[2][3] == "NA");
    }
    SECTION("schema mismatches throw") {
        ArmRecord wide = make_arm("w", 0.5, 0.5, 0.1, 1.0, 1.0, {1, 2, 3});
        REQUIRE_THROWS_AS(compare_report(a, wide), std::invalid_argument);
        ArmRecord shifted = b;
        shifted.hist.hi = 2.0;
        REQUIRE_THROWS_AS(compare_report(a, shifted), std::invalid_argument);
    }
}

TEST_CASE("phase loading is gated on the stored config digest", "[experiment]") {
    oracle::TempDir td("phase_gate");
    Rng rng(77);
    Network net = oracle::random_network(rng, 4, 3);
    const std::string path = td.file("phase.ckpt");
    save_checkpoint(net, nullptr, path, 9, "digest-a");

    Checkpoint out;
    REQUIRE(detail::try_load_phase(path, "digest-a", out));
    REQUIRE(out.net.dims == net.dims);
    for (std::size_t l = 0; l < net.weights.size(); ++l)
        REQUIRE(out.net.weights[l].data == net.weights[l].data);

    REQUIRE_FALSE(detail::try_load_phase(path, "digest-b", out));
    REQUIRE_FALSE(detail::try_load_phase(td.file("absent.ckpt"), "digest-a", out));

    std::ofstream(td.file("garbage.ckpt")) << "not a checkpoint\n";
    REQUIRE_FALSE(detail::try_load_phase(td.file("garbage.ckpt"), "digest-a", out));
}

TEST_CASE("train pipeline runs, reproduces digests, and resumes", "[experiment]") {
    oracle::TempDir td("exp_train");
    ExperimentConfig cfg = tiny_cfg("train", td.file("runA"));
    cfg.seeds = {0, 1};

    nlohmann::json top = run_experiment(cfg);
    REQUIRE(top["ok"].get<bool>());
    REQUIRE(top["pipeline"] == "train");
    REQUIRE(top["seeds"].size() == 2);
    for (const auto& entry : top["seeds"]) {
        REQUIRE(entry["error"].is_null());
        REQUIRE(entry["metrics_digest"].get<std::string>().size() == 16);
        REQUIRE(entry["metrics"]["clean_acc"].is_number());
    }
    REQUIRE(top["summary_digest"].get<std::string>().size() == 16);

    fs::path seed0 = fs::path(cfg.out_dir) / "train_seed0";
    for (const char* name : {"config.txt", "summary.json", "dense.ckpt", "history_dense.csv",
                             "distortion_dense.csv", "sparsity_dense.csv", "hist_dense.csv"})
        REQUIRE(fs::exists(seed0 / name));
    REQUIRE(fs::exists(fs::path(cfg.out_dir) / "summary.json"));

    std::ifstream cfg_in(seed0 / "config.txt");
    std::stringstream written;
    written << cfg_in.rdbuf();
    REQUIRE(written.str() == cfg.canonical_string());

    // Same config into a fresh directory: metrics and summary digests agree.
    ExperimentConfig cfg_b = cfg;
    cfg_b.out_dir = td.file("runB");
    nlohmann::json top_b = run_experiment(cfg_b);
    REQUIRE(top_b["summary_digest"] == top["summary_digest"]);
    for (std::size_t i = 0; i < 2; ++i)
        REQUIRE(top_b["seeds"][i]["metrics_digest"] == top["seeds"][i]["metrics_digest"]);

    // Re-running in place resumes the trained phase and keeps the digest.
    nlohmann::json top_c = run_experiment(cfg);
    REQUIRE(top_c["ok"].get<bool>());
    REQUIRE(top_c["summary_digest"] == top["summary_digest"]);
    REQUIRE(top_c["seeds"][0]["phases"]["dense"]["resumed"].get<bool>());

    // A changed config invalidates the stored checkpoint instead of reusing it.
    ExperimentConfig cfg_d = cfg;
    cfg_d.train.initial_lr = 0.05;
    nlohmann::json fresh = run_seed(cfg_d, 0, seed0);
    REQUIRE(fresh["phases"]["dense"].contains("epochs"));
    REQUIRE_FALSE(fresh["phases"]["dense"].contains("resumed"));
}

TEST_CASE("prune pipeline reports the deterministic sparsity of its arm", "[experiment]") {
    oracle::TempDir td("exp_prune");
    ExperimentConfig cfg = tiny_cfg("prune", td.file("out"));
    cfg.prune_method = PruneMethod::kGup;
    cfg.prune_ratio = 30.0;
    cfg.retrain_epochs = 2;

    nlohmann::json top = run_experiment(cfg);
    REQUIRE(top["ok"].get<bool>());
    const nlohmann::json& entry = top["seeds"][0];
    REQUIRE(entry["phases"]["method"] == "gup");
    REQUIRE(entry["phases"]["ratio"].get<double>() == 30.0);
    // 2-4-2 net: 16 weights, 30% rounds half-up to 5 removed -> density 11/16.
    REQUIRE(entry["metrics"]["density"].get<double>() == Catch::Approx(11.0 / 16.0));

    fs::path dir = fs::path(cfg.out_dir) / "prune_seed0";
    REQUIRE(fs::exists(dir / "retrained.ckpt"));
    REQUIRE(fs::exists(dir / "history_retrain.csv"));
    REQUIRE(fs::exists(dir / "distortion_pruned.csv"));

    Checkpoint ck = load_checkpoint((dir / "retrained.ckpt").string());
    REQUIRE(ck.mask);
    std::size_t zeros = 0;
    for (const auto& layer : ck.mask->layers)
        for (std::uint8_t b : layer) zeros += (b == 0);
    REQUIRE(zeros == 5);
}

TEST_CASE("lottery pipeline writes the search trace and ticket arm", "[experiment]") {
    oracle::TempDir td("exp_lottery");
    ExperimentConfig cfg = tiny_cfg("lottery", td.file("out"));
    cfg.lottery_p = 20.0;
    cfg.lottery_k = 2;
    cfg.lottery_n = 1;

    nlohmann::json top = run_experiment(cfg);
    REQUIRE(top["ok"].get<bool>());
    const nlohmann::json& entry = top["seeds"][0];
    REQUIRE(entry["phases"]["search"]["iterations"].get<int>() == 2);
    // Cumulative 40% of the 16-weight pool rounds half-up to 6 zeros: 37.5%.
    REQUIRE(entry["phases"]["search"]["final_ratio"].get<double>() == Catch::Approx(37.5));
    REQUIRE(entry["metrics"]["density"].get<double>() == Catch::Approx(10.0 / 16.0));

    fs::path dir = fs::path(cfg.out_dir) / "lottery_seed0";
    for (const char* name : {"ticket.ckpt", "ticket_trained.ckpt", "iterations.csv",
                             "history_ticket.csv", "hist_ticket.csv"})
        REQUIRE(fs::exists(dir / name));
    REQUIRE(count_lines((dir / "iterations.csv").string()) == 3);  // header + 2 rounds

    nlohmann::json again = run_experiment(cfg);
    REQUIRE(again["seeds"][0]["phases"]["search"]["resumed"].get<bool>());
    REQUIRE(again["seeds"][0]["phases"]["ticket_train"]["resumed"].get<bool>());
    REQUIRE(again["seeds"][0]["metrics_digest"] == entry["metrics_digest"]);
}

TEST_CASE("iwi pipeline matches the baseline budget and resumes via sidecar", "[experiment]") {
    oracle::TempDir td("exp_iwi");
    ExperimentConfig cfg = tiny_cfg("iwi", td.file("out"));
    cfg.lottery_p = 20.0;
    cfg.lottery_k = 2;
    cfg.lottery_n = 1;
    cfg.iwi_nf = 2;
    cfg.continue_epochs = 2;
    cfg.continue_stop_c = false;

    nlohmann::json top = run_experiment(cfg);
    REQUIRE(top["ok"].get<bool>());
    const nlohmann::json& entry = top["seeds"][0];
    // K*N + N_f + continuation = 2 + 2 + 2; the baseline trains the same total.
    REQUIRE(entry["phases"]["iwi"]["total_epochs"].get<int>() == 6);
    REQUIRE(entry["phases"]["baseline"]["epochs"].get<int>() == 6);
    for (const char* key : {"baseline", "iwi"})
        REQUIRE(entry["metrics"][key]["adv_acc"].is_number());
    REQUIRE(entry["metrics"].contains("delta_l1"));
    REQUIRE(entry["metrics"].contains("delta_adv"));
    REQUIRE(entry["metrics"].contains("delta_clean"));

    fs::path dir = fs::path(cfg.out_dir) / "iwi_seed0";
    for (const char* name :
         {"iwi.ckpt", "baseline.ckpt", "iwi_total_epochs.txt", "iterations.csv",
          "history_finetune.csv", "history_continue.csv", "history_baseline.csv",
          "compare_metrics.csv", "compare_hist.csv"})
        REQUIRE(fs::exists(dir / name));
    std::ifstream sidecar(dir / "iwi_total_epochs.txt");
    int budget = 0;
    REQUIRE(static_cast<bool>(sidecar >> budget));
    REQUIRE(budget == 6);

    nlohmann::json again = run_experiment(cfg);
    REQUIRE(again["ok"].get<bool>());
    REQUIRE(again["seeds"][0]["phases"]["iwi"]["resumed"].get<bool>());
    REQUIRE(again["seeds"][0]["phases"]["baseline"]["resumed"].get<bool>());
    REQUIRE(again["seeds"][0]["metrics_digest"] == entry["metrics_digest"]);
}

TEST_CASE("certify pipeline emits per-pair certificate tables", "[experiment]") {
    oracle::TempDir td("exp_certify");
    ExperimentConfig cfg = tiny_cfg("certify", td.file("out"));
    cfg.certify_grid_check = true;
    cfg.certify_grid_steps = 8;
    cfg.certify_r_max = 0.4;

    nlohmann::json top = run_experiment(cfg);
    REQUIRE(top["ok"].get<bool>());
    const nlohmann::json& entry = top["seeds"][0];
    for (const char* pair : {"l2", "linf"}) {
        const nlohmann::json& m = entry["metrics"][pair];
        REQUIRE(m["mean_radius"].get<double>() >= m["min_radius"].get<double>());
        REQUIRE(m["min_radius"].get<double>() >= 0.0);
        REQUIRE(m["grid_violations"].get<int>() == 0);
    }

    fs::path dir = fs::path(cfg.out_dir) / "certify_seed0";
    // 32 samples split 16/8/8, so each table holds 8 rows plus the header.
    REQUIRE(count_lines((dir / "certificates_l2.csv").string()) == 9);
    REQUIRE(count_lines((dir / "certificates_linf.csv").string()) == 9);
}

TEST_CASE("run_experiment records per-seed failures without aborting", "[experiment]") {
    oracle::TempDir td("exp_errors");
    ExperimentConfig cfg = tiny_cfg("train", td.file("out"));
    cfg.dims = {3, 4, 2};  // dataset is 2-d, so every seed fails fast
    cfg.seeds = {0, 1};

    nlohmann::json top = run_experiment(cfg);
    REQUIRE_FALSE(top["ok"].get<bool>());
    REQUIRE(top["seeds"].size() == 2);
    for (const auto& entry : top["seeds"]) {
        REQUIRE(entry["error"].is_string());
        REQUIRE(entry["error"].get<std::string>().find("input dim") != std::string::npos);
        REQUIRE_FALSE(entry.contains("metrics_digest"));
    }
    REQUIRE(top["summary_digest"].get<std::string>() == hex64(fnv1a(std::string{})));

    ExperimentConfig bogus = tiny_cfg("train", td.file("out2"));
    bogus.pipeline = "bogus";
    REQUIRE_THROWS_AS(run_experiment(bogus), std::invalid_argument);
    REQUIRE_THROWS_AS(run_seed(bogus, 0, td.file("seed_dir")), std::invalid_argument);
}
