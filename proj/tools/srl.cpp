// Command-line front end: adversarial training, pruning, lottery-ticket
// search, inverse weights inheritance, Lipschitz certification, and the
// experiment orchestrator, over small dense ReLU networks.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "srl/experiment.hpp"

namespace {

struct DataOpts {
    std::string name;
    std::size_t n = 0;
    double noise = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
};

srl::ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return srl::ExperimentConfig{};
    return srl::ExperimentConfig::from_kv(srl::KvConfig::parse_file(path));
}

void apply_data_opts(srl::ExperimentConfig& cfg, const DataOpts& d) {
    if (!d.name.empty()) cfg.dataset = d.name;
    if (d.n != 0) cfg.dataset_n = d.n;
    if (d.noise >= 0.0) cfg.dataset_noise = d.noise;
    if (d.seed_set) cfg.dataset_seed = d.seed;
}

struct Workbench {
    srl::Dataset ds;
    std::vector<srl::Sample> train_set, val_set, test_set;
    srl::TrainConfig tc;
};

Workbench make_workbench(const srl::ExperimentConfig& cfg, std::uint64_t seed) {
    Workbench w;
    w.ds = srl::make_dataset(cfg.dataset, cfg.dataset_n, cfg.dataset_noise, cfg.dataset_seed);
    w.train_set = w.ds.train();
    w.val_set = w.ds.val();
    w.test_set = w.ds.test();
    w.tc = cfg.train;
    w.tc.seed = seed;
    w.tc.batch_size =
        std::min(w.tc.batch_size, std::max<std::size_t>(1, w.train_set.size() / 4));
    if (!w.tc.attack.clamp && w.ds.clamp_hint) w.tc.attack.clamp = w.ds.clamp_hint;
    return w;
}

const srl::Mask* mask_ptr(const srl::Checkpoint& ck) {
    return ck.mask ? &*ck.mask : nullptr;
}

void print_sparsity(const srl::SparsityReport& report) {
    auto line = [](const std::string& label, const srl::LayerSparsity& s) {
        std::cout << label << ": total=" << s.total << " l0=" << s.l0
                  << " density=" << srl::csv_num(s.density) << " l1=" << srl::csv_num(s.l1)
                  << " l2=" << srl::csv_num(s.l2) << " inf_induced=" << srl::csv_num(s.inf_induced)
                  << " spectral=" << srl::csv_num(s.spectral) << "\n";
    };
    for (std::size_t l = 0; l < report.layers.size(); ++l)
        line("layer " + std::to_string(l + 1), report.layers[l]);
    line("global", report.global);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial pruning laboratory for small dense ReLU networks"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    std::uint64_t seed = 0;
    auto* seed_opt = app.add_option("--seed", seed, "base seed (default: first config seed)");
    app.add_option("--config", config_path, "flat dotted-key configuration file");
    app.add_option("--out", out_path, "output path (meaning depends on the subcommand)");

    DataOpts data;
    app.add_option("--dataset", data.name, "dataset: two_moons, blobs, or circles");
    app.add_option("--n", data.n, "dataset size");
    app.add_option("--noise", data.noise, "dataset noise sigma");
    app.add_option("--data-seed", data.seed, "dataset generation seed")
        ->each([&data](const std::string&) { data.seed_set = true; });

    // ---- train ----------------------------------------------------------
    auto* train_cmd = app.add_subcommand("train", "adversarially train a dense network");
    std::string history_path;
    train_cmd->add_option("--history", history_path, "write per-epoch history CSV here");
    train_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        std::uint64_t s = seed_opt->count() ? seed : cfg.seeds.front();
        Workbench w = make_workbench(cfg, s);
        srl::Network theta0 = srl::Network::init(cfg.dims, s);
        srl::TrainResult r =
            srl::adversarial_train(theta0, nullptr, w.train_set, w.val_set, w.tc);
        if (r.diverged) throw std::runtime_error("training diverged (non-finite loss)");
        std::string out = out_path.empty() ? "net.ckpt" : out_path;
        srl::save_checkpoint(r.net, nullptr, out, s, cfg.digest());
        if (!history_path.empty()) srl::history_csv(r.record).save(history_path);
        const srl::EpochRow& last = r.record.rows.back();
        std::cout << "epochs=" << r.record.rows.size()
                  << " best_sum_epoch=" << r.record.best_sum_epoch
                  << " val_clean_acc=" << srl::csv_num(last.clean_acc)
                  << " val_adv_acc=" << srl::csv_num(last.adv_acc) << "\n"
                  << "checkpoint written to " << out << "\n";
    });

    // ---- attack ---------------------------------------------------------
    auto* attack_cmd = app.add_subcommand("attack", "evaluate a checkpoint under PGD");
    std::string ckpt_path, distortion_path;
    std::string eps_spec, step_spec;
    int iters = 0;
    bool rand_start = true;
    std::string clamp_spec;
    attack_cmd->add_option("--ckpt,--in", ckpt_path, "checkpoint to evaluate")->required();
    attack_cmd->add_option("--eps", eps_spec, "perturbation budget (accepts fractions like 8/255)");
    attack_cmd->add_option("--step", step_spec, "PGD step size (accepts fractions)");
    attack_cmd->add_option("--iters", iters, "PGD iterations");
    auto* rs_opt = attack_cmd->add_option("--rand-start", rand_start, "random start: true/false");
    attack_cmd->add_option("--clamp", clamp_spec, "input box as lo,hi");
    attack_cmd->add_option("--distortion", distortion_path,
                           "also search minimum flip radii, write CSV here");
    attack_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        std::uint64_t s = seed_opt->count() ? seed : cfg.seeds.front();
        Workbench w = make_workbench(cfg, s);
        srl::Checkpoint ck = srl::load_checkpoint(ckpt_path);
        srl::AttackConfig atk = w.tc.attack;
        atk.iterations = cfg.eval_iters;
        if (!eps_spec.empty()) atk.epsilon = srl::detail::parse_number(eps_spec, "--eps");
        if (!step_spec.empty()) atk.step_size = srl::detail::parse_number(step_spec, "--step");
        if (iters > 0) atk.iterations = iters;
        if (rs_opt->count()) atk.random_start = rand_start;
        if (!clamp_spec.empty()) {
            std::size_t comma = clamp_spec.find(',');
            if (comma == std::string::npos)
                throw std::invalid_argument("--clamp expects lo,hi");
            atk.clamp = {std::stod(clamp_spec.substr(0, comma)),
                         std::stod(clamp_spec.substr(comma + 1))};
        }
        srl::EvalResult er = srl::evaluate(ck.net, mask_ptr(ck), w.test_set, atk,
                                           srl::derive_seed(s, 0x6576616cull));
        std::cout << "samples=" << er.total
                  << " clean_accuracy=" << srl::csv_num(er.clean_accuracy)
                  << " adversarial_accuracy=" << srl::csv_num(er.adversarial_accuracy) << "\n";
        if (!distortion_path.empty()) {
            srl::DistortionSearchConfig dc;
            dc.epsilon_max = cfg.distortion_eps_max;
            dc.resolution = cfg.distortion_resolution;
            dc.inner = atk;
            srl::DistortionReport dr = srl::mean_distortion(ck.net, mask_ptr(ck), w.test_set, dc,
                                                            srl::derive_seed(s, 0x64697374ull));
            srl::distortion_csv(dr).save(distortion_path);
            std::cout << "mean_distortion=" << srl::csv_opt(dr.mean)
                      << " unbounded=" << dr.unbounded_count << "\n";
        }
    });

    // ---- prune ----------------------------------------------------------
    auto* prune_cmd = app.add_subcommand("prune", "apply a one-shot pruning method");
    std::string method = "gup", in_path, report_path;
    double ratio = 50.0;
    prune_cmd->add_option("--method", method, "gup, lup, fp, or ns")
        ->check(CLI::IsMember({"gup", "lup", "fp", "ns"}));
    prune_cmd->add_option("--ratio", ratio, "pruning percentage in (0,100)");
    prune_cmd->add_option("--in", in_path, "input checkpoint")->required();
    prune_cmd->add_option("--report", report_path, "write the sparsity report CSV here");
    prune_cmd->callback([&] {
        srl::Checkpoint ck = srl::load_checkpoint(in_path);
        srl::Mask mask = ck.mask ? *ck.mask : srl::Mask::ones_like(ck.net);
        switch (srl::prune_method_from_name(method)) {
            case srl::PruneMethod::kGup: mask = srl::gup(ck.net, mask, ratio); break;
            case srl::PruneMethod::kLup: mask = srl::lup(ck.net, mask, ratio); break;
            case srl::PruneMethod::kFp: mask = srl::fp(ck.net, mask, ratio); break;
            case srl::PruneMethod::kNs: {
                srl::NsResult r = srl::ns(ck.net, mask, ratio);
                mask = r.mask;
                std::cout << "ns achieved_percent=" << srl::csv_num(r.achieved_percent)
                          << " guard_warning=" << (r.guard_warning ? "1" : "0") << "\n";
                break;
            }
        }
        srl::Network masked = srl::apply_mask(ck.net, &mask);
        std::string out = out_path.empty() ? "pruned.ckpt" : out_path;
        srl::save_checkpoint(masked, &mask, out, ck.seed, ck.config_digest);
        srl::SparsityReport report = srl::sparsity_report(masked, &mask);
        print_sparsity(report);
        if (!report_path.empty()) srl::sparsity_csv(report).save(report_path);
        std::cout << "checkpoint written to " << out << "\n";
    });

    // ---- lottery --------------------------------------------------------
    auto* lottery_cmd = app.add_subcommand("lottery", "iterative winning-ticket search");
    double lot_p = 0.0;
    int lot_k = 0, lot_n = 0, train_epochs = 0;
    std::string iterations_path;
    lottery_cmd->add_option("--p", lot_p, "per-iteration pruning percentage of original count");
    lottery_cmd->add_option("--k", lot_k, "pruning iterations");
    lottery_cmd->add_option("--epochs-per-iter", lot_n, "training epochs per iteration");
    lottery_cmd->add_option("--train-epochs", train_epochs,
                            "after the search, train the ticket this many epochs");
    lottery_cmd->add_option("--iterations-csv", iterations_path,
                            "per-iteration CSV path (default: iterations.csv)");
    lottery_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        std::uint64_t s = seed_opt->count() ? seed : cfg.seeds.front();
        Workbench w = make_workbench(cfg, s);
        srl::LotteryConfig lc = cfg.lottery_config();
        lc.train = w.tc;
        if (lot_p > 0.0) lc.p_percent = lot_p;
        if (lot_k > 0) lc.iterations = lot_k;
        if (lot_n > 0) lc.epochs_per_iteration = lot_n;
        srl::Network theta0 = srl::Network::init(cfg.dims, s);
        srl::LotteryResult lr = srl::find_winning_ticket(theta0, w.train_set, w.val_set, lc);
        std::string out = out_path.empty() ? "ticket.ckpt" : out_path;
        srl::save_checkpoint(lr.ticket, &lr.mask, out, s, cfg.digest());
        srl::iterations_csv(lr.rows).save(
            iterations_path.empty() ? "iterations.csv" : iterations_path);
        std::cout << "final_ratio=" << srl::csv_num(lr.rows.back().cumulative_ratio)
                  << " ticket written to " << out << "\n";
        if (train_epochs > 0) {
            srl::TrainConfig tt = w.tc;
            tt.mode = srl::StopMode::kStopE;
            tt.total_epochs = train_epochs;
            tt.allow_short_schedule = true;
            tt.seed = srl::derive_seed(s, 0x74696b74ull);
            srl::TrainResult r =
                srl::train_ticket(lr.ticket, lr.mask, w.train_set, w.val_set, tt);
            if (r.diverged) throw std::runtime_error("ticket training diverged");
            std::string trained_out = out + ".trained";
            srl::save_checkpoint(r.net, &lr.mask, trained_out, s, cfg.digest());
            const srl::EpochRow& last = r.record.rows.back();
            std::cout << "trained ticket: val_clean_acc=" << srl::csv_num(last.clean_acc)
                      << " val_adv_acc=" << srl::csv_num(last.adv_acc) << " written to "
                      << trained_out << "\n";
        }
    });

    // ---- iwi ------------------------------------------------------------
    auto* iwi_cmd = app.add_subcommand("iwi", "inverse weights inheritance pipeline");
    int iwi_nf = 0, continue_epochs = 0;
    bool iwi_stop_c = false;
    iwi_cmd->add_option("--p", lot_p, "per-iteration pruning percentage");
    iwi_cmd->add_option("--k", lot_k, "pruning iterations");
    iwi_cmd->add_option("--n", lot_n, "training epochs per search iteration");
    iwi_cmd->add_option("--nf", iwi_nf, "ticket fine-tune epochs");
    iwi_cmd->add_option("--continue-epochs", continue_epochs,
                        "full-network continuation epochs (Stop-E)");
    iwi_cmd->add_flag("--stop-c", iwi_stop_c, "use Stop-C for the continuation phase");
    iwi_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        cfg.pipeline = "iwi";
        if (lot_p > 0.0) cfg.lottery_p = lot_p;
        if (lot_k > 0) cfg.lottery_k = lot_k;
        if (lot_n > 0) cfg.lottery_n = lot_n;
        if (iwi_nf > 0) cfg.iwi_nf = iwi_nf;
        if (continue_epochs > 0) cfg.continue_epochs = continue_epochs;
        cfg.continue_stop_c = iwi_stop_c || cfg.continue_stop_c;
        std::uint64_t s = seed_opt->count() ? seed : cfg.seeds.front();
        std::filesystem::path dir = out_path.empty() ? "iwi_run" : out_path;
        nlohmann::json summary = srl::run_seed(cfg, s, dir);
        std::cout << "delta_l1=" << srl::csv_num(summary["metrics"]["delta_l1"].get<double>())
                  << " delta_adv=" << srl::csv_num(summary["metrics"]["delta_adv"].get<double>())
                  << "\nartifacts in " << dir.string() << "\n";
    });

    // ---- certify --------------------------------------------------------
    auto* certify_cmd = app.add_subcommand("certify", "Lipschitz robustness certificates");
    std::string pair_name = "l2", cert_out;
    bool grid_check = false;
    certify_cmd->add_option("--ckpt", ckpt_path, "checkpoint to certify")->required();
    certify_cmd->add_option("--pair", pair_name, "norm pair: l2 or linf")
        ->check(CLI::IsMember({"l2", "linf"}));
    certify_cmd->add_flag("--grid-check", grid_check,
                          "exhaustively verify each certificate on a grid (dim <= 3)");
    certify_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        std::uint64_t s = seed_opt->count() ? seed : cfg.seeds.front();
        Workbench w = make_workbench(cfg, s);
        srl::Checkpoint ck = srl::load_checkpoint(ckpt_path);
        srl::NormPair pair = srl::NormPair::from_name(pair_name);
        srl::CsvTable t;
        t.header = {"sample", "yhat", "margin_min", "L_min", "radius", "grid_violations"};
        std::size_t total_violations = 0;
        for (std::size_t i = 0; i < w.test_set.size(); ++i) {
            srl::LipschitzCertificate cert =
                srl::certified_radius(ck.net, mask_ptr(ck), w.test_set[i].x, pair);
            double margin_min = std::numeric_limits<double>::infinity();
            double l_min = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < cert.margins.size(); ++k) {
                if (static_cast<int>(k) == cert.predicted) continue;
                margin_min = std::min(margin_min, cert.margins[k]);
                l_min = std::min(l_min, cert.bounds[k]);
            }
            std::string grid_cell = "NA";
            if (grid_check && w.test_set[i].x.size() <= 3) {
                double r = std::min(cert.radius, cfg.certify_r_max);
                std::size_t v = 0;
                if (r > 0.0)
                    v = srl::grid_soundness_check(ck.net, mask_ptr(ck), w.test_set[i].x, r, pair,
                                                  r / static_cast<double>(cfg.certify_grid_steps));
                total_violations += v;
                grid_cell = std::to_string(v);
            }
            t.add_row({std::to_string(i), std::to_string(cert.predicted), srl::csv_num(margin_min),
                       srl::csv_num(l_min), srl::csv_num(cert.radius), grid_cell});
        }
        std::string out = out_path.empty() ? ("certificates_" + pair_name + ".csv") : out_path;
        t.save(out);
        std::cout << "certificates for " << w.test_set.size() << " samples written to " << out;
        if (grid_check) std::cout << " grid_violations=" << total_violations;
        std::cout << "\n";
    });

    // ---- hist -----------------------------------------------------------
    auto* hist_cmd = app.add_subcommand("hist", "surviving-weight histogram");
    std::size_t bins = 41;
    std::string range_spec = "-1,1";
    hist_cmd->add_option("--ckpt", ckpt_path, "checkpoint to histogram")->required();
    hist_cmd->add_option("--bins", bins, "bin count");
    hist_cmd->add_option("--range", range_spec, "closed range as lo,hi");
    hist_cmd->callback([&] {
        srl::Checkpoint ck = srl::load_checkpoint(ckpt_path);
        std::size_t comma = range_spec.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("--range expects lo,hi");
        double lo = std::stod(range_spec.substr(0, comma));
        double hi = std::stod(range_spec.substr(comma + 1));
        srl::Histogram h = srl::weight_histogram(ck.net, mask_ptr(ck), bins, lo, hi);
        std::string out = out_path.empty() ? "hist.csv" : out_path;
        srl::histogram_csv(h).save(out);
        std::cout << "histogram (" << h.counts.size() << " bins, masked=" << h.masked
                  << ") written to " << out << "\n";
    });

    // ---- run ------------------------------------------------------------
    auto* run_cmd = app.add_subcommand("run", "execute the configured pipeline for every seed");
    run_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        if (seed_opt->count()) cfg.seeds = {seed};
        if (!out_path.empty()) cfg.out_dir = out_path;
        nlohmann::json top = srl::run_experiment(cfg);
        std::cout << "summary_digest=" << top["summary_digest"].get<std::string>() << "\n"
                  << "artifacts in " << cfg.out_dir << "\n";
        if (!top["ok"].get<bool>()) {
            for (const auto& entry : top["seeds"])
                if (!entry["error"].is_null())
                    std::cerr << "seed " << entry["seed"] << ": " << entry["error"] << "\n";
            throw std::runtime_error("one or more seeds failed");
        }
    });

    // ---- compare --------------------------------------------------------
    auto* compare_cmd = app.add_subcommand("compare", "metric deltas between two checkpoints");
    std::string ckpt_a, ckpt_b;
    compare_cmd->add_option("--a", ckpt_a, "first checkpoint (reference arm)")->required();
    compare_cmd->add_option("--b", ckpt_b, "second checkpoint")->required();
    compare_cmd->callback([&] {
        srl::ExperimentConfig cfg = load_config(config_path);
        apply_data_opts(cfg, data);
        std::uint64_t s = seed_opt->count() ? seed : cfg.seeds.front();
        Workbench w = make_workbench(cfg, s);
        auto build_arm = [&](const std::string& name, const srl::Checkpoint& ck) {
            srl::AttackConfig atk = w.tc.attack;
            atk.iterations = cfg.eval_iters;
            srl::EvalResult er = srl::evaluate(ck.net, mask_ptr(ck), w.test_set, atk,
                                               srl::derive_seed(s, 0x6576616cull));
            srl::DistortionSearchConfig dc;
            dc.epsilon_max = cfg.distortion_eps_max;
            dc.resolution = cfg.distortion_resolution;
            dc.inner = atk;
            srl::DistortionReport dr = srl::mean_distortion(
                ck.net, mask_ptr(ck), w.test_set, dc, srl::derive_seed(s, 0x64697374ull));
            srl::SparsityReport sr = srl::sparsity_report(ck.net, mask_ptr(ck));
            srl::ArmRecord arm;
            arm.name = name;
            arm.clean_acc = er.clean_accuracy;
            arm.adv_acc = er.adversarial_accuracy;
            arm.mean_distortion = dr.mean;
            arm.l1_norm = sr.global.l1;
            arm.l2_norm = sr.global.l2;
            arm.hist = srl::weight_histogram(ck.net, mask_ptr(ck), cfg.hist_bins, cfg.hist_lo,
                                             cfg.hist_hi);
            return arm;
        };
        srl::ArmRecord a = build_arm("a", srl::load_checkpoint(ckpt_a));
        srl::ArmRecord b = build_arm("b", srl::load_checkpoint(ckpt_b));
        srl::CompareReport cmp = srl::compare_report(a, b);
        std::string prefix = out_path.empty() ? "compare" : out_path;
        cmp.metrics.save(prefix + "_metrics.csv");
        cmp.histogram_overlay.save(prefix + "_hist.csv");
        std::cout << "delta_clean=" << srl::csv_num(cmp.delta_clean)
                  << " delta_adv=" << srl::csv_num(cmp.delta_adv)
                  << " delta_l1=" << srl::csv_num(cmp.delta_l1) << "\nreports written to "
                  << prefix << "_metrics.csv and " << prefix << "_hist.csv\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
