// Acceptance gate: one criterion per block, each printing a single
// [PASS]/[FAIL] line with its measured statistic and wall-clock budget.
// Exit status is nonzero if any criterion fails its check or its budget.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "srl/experiment.hpp"
#include "srl/norms.hpp"

using namespace srl;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    int noted_failures = 0;
};

void require(Outcome& o, bool cond, const std::string& msg) {
    if (cond) return;
    o.pass = false;
    if (o.noted_failures < 4) {
        if (!o.detail.empty()) o.detail += "; ";
        o.detail += msg;
    } else if (o.noted_failures == 4) {
        o.detail += "; ...";
    }
    ++o.noted_failures;
}

/// On success the body's detail is reported verbatim; exceptions fail the
/// criterion with their message. The elapsed time is checked against the
/// budget as part of the verdict.
bool run_criterion(int id, const char* label, double limit_seconds,
                   const std::function<void(Outcome&)>& body) {
    Outcome out;
    auto t0 = std::chrono::steady_clock::now();
    try {
        body(out);
    } catch (const std::exception& e) {
        out.pass = false;
        out.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = out.pass && secs < limit_seconds;
    if (out.pass && secs >= limit_seconds) out.detail += " (over time budget)";
    std::printf("[%s] %2d %s: %s [%.2fs < %.0fs]\n", ok ? "PASS" : "FAIL", id, label,
                out.detail.c_str(), secs, limit_seconds);
    std::fflush(stdout);
    return ok;
}

bool bits_equal(double a, double b) {
    return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool nets_bit_equal(const Network& a, const Network& b) {
    if (a.dims != b.dims) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        for (std::size_t k = 0; k < a.weights[l].data.size(); ++k)
            if (!bits_equal(a.weights[l].data[k], b.weights[l].data[k])) return false;
    for (std::size_t l = 0; l < a.scaling.size(); ++l)
        for (std::size_t k = 0; k < a.scaling[l].size(); ++k)
            if (!bits_equal(a.scaling[l][k], b.scaling[l][k])) return false;
    return true;
}

std::size_t mask_zeros(const Mask& m) {
    std::size_t z = 0;
    for (const auto& layer : m.layers)
        for (std::uint8_t b : layer) z += (b == 0);
    return z;
}

bool mask_empties_layer(const Mask& m) {
    for (const auto& layer : m.layers) {
        bool any = false;
        for (std::uint8_t b : layer) any = any || (b != 0);
        if (!any) return true;
    }
    return false;
}

int lowest_argmax(const std::vector<double>& v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < v.size(); ++k)
        if (v[k] > v[best]) best = k;
    return static_cast<int>(best);
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

TrainConfig desk_train_config() {
    TrainConfig tc;
    tc.mode = StopMode::kStopE;
    tc.total_epochs = 240;
    tc.batch_size = 128;
    tc.initial_lr = 0.1;
    tc.momentum = 0.9;
    tc.weight_decay = 5e-4;
    tc.attack.epsilon = 8.0 / 255.0;
    tc.attack.step_size = 2.0 / 255.0;
    tc.attack.iterations = 10;
    return tc;
}

AttackConfig eval_attack_100() {
    AttackConfig a;
    a.epsilon = 8.0 / 255.0;
    a.step_size = 2.0 / 255.0;
    a.iterations = 100;
    return a;
}

void put_be_u32(std::ofstream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_idx_fixture(const std::string& img_path, const std::string& lab_path,
                       const std::vector<std::vector<unsigned char>>& images,
                       const std::vector<unsigned char>& labels) {
    std::ofstream img(img_path, std::ios::binary);
    put_be_u32(img, 0x803);
    put_be_u32(img, static_cast<std::uint32_t>(images.size()));
    put_be_u32(img, 2);
    put_be_u32(img, 2);
    for (const auto& im : images) img.write(reinterpret_cast<const char*>(im.data()), 4);
    std::ofstream lab(lab_path, std::ios::binary);
    put_be_u32(lab, 0x801);
    put_be_u32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()),
              static_cast<std::streamsize>(labels.size()));
}

// ---------------------------------------------------------------------------
// 1. Backpropagation agrees with central finite differences.
// ---------------------------------------------------------------------------
void criterion_gradients(Outcome& o) {
    Rng rng(1001);
    const double h = 1e-5;
    double max_rel = 0.0;
    int done = 0;
    while (done < 100) {
        Network net = oracle::random_network(rng, 8, 4, true);
        for (Matrix& w : net.weights)
            for (double& v : w.data) v *= 0.5;  // keep logits O(1) so FD is well-conditioned
        Mask mask = oracle::random_mask(rng, net, 0.25);
        const Mask* mp = (done % 2 == 0) ? nullptr : &mask;

        std::vector<Sample> batch;
        for (int b = 0; b < 2; ++b)
            batch.push_back({oracle::random_input(rng, net.input_dim()),
                             static_cast<int>(rng.below(net.class_count()))});
        bool near_kink = false;
        for (const Sample& s : batch)
            near_kink = near_kink || oracle::min_abs_pre(net, mp, s.x) < 1e-3;
        if (near_kink) continue;  // FD is invalid across ReLU kinks
        ++done;

        LossGrads lg = loss_and_grads(net, mp, batch);
        oracle::FdGrads fd = oracle::fd_loss_grads(net, mp, batch, h);
        for (std::size_t l = 0; l < lg.grads.weights.size(); ++l)
            for (std::size_t k = 0; k < lg.grads.weights[l].data.size(); ++k)
                max_rel = std::max(
                    max_rel, oracle::rel_err(lg.grads.weights[l].data[k], fd.weights[l].data[k]));
        for (std::size_t l = 0; l < lg.grads.scaling.size(); ++l)
            for (std::size_t k = 0; k < lg.grads.scaling[l].size(); ++k)
                max_rel =
                    std::max(max_rel, oracle::rel_err(lg.grads.scaling[l][k], fd.scaling[l][k]));
    }
    require(o, max_rel < 1e-4, "max rel err " + fmt(max_rel) + " >= 1e-4");
    if (o.pass) o.detail = "max rel err " + fmt(max_rel) + " over 100 nets";
}

// ---------------------------------------------------------------------------
// 2. Sampled local Lipschitz values never exceed the certified bound.
// ---------------------------------------------------------------------------
void criterion_lipschitz_dominance(Outcome& o) {
    Rng rng(2002);
    const double radius = 8.0 / 255.0;
    std::size_t checks = 0, violations = 0;
    for (int n = 0; n < 20; ++n) {
        Network net = oracle::random_network(rng, 8, 4, true);
        for (int i = 0; i < 5; ++i) {
            std::vector<double> x = oracle::random_input(rng, net.input_dim());
            int yhat = lowest_argmax(forward(net, nullptr, x));
            for (NormPair pair : {NormPair::l2(), NormPair::linf()}) {
                for (int k = 0; k < static_cast<int>(net.class_count()); ++k) {
                    if (k == yhat) continue;
                    double bound = lipschitz_bound(net, nullptr, yhat, k, pair);
                    Rng sample_rng(derive_seed(2002, n, i, static_cast<std::uint64_t>(k)));
                    double emp = empirical_lipschitz(net, nullptr, x, k, yhat, radius, 1000, pair,
                                                     sample_rng);
                    ++checks;
                    if (emp > bound * (1.0 + 1e-12)) ++violations;
                }
            }
        }
    }
    require(o, violations == 0, std::to_string(violations) + " dominance violations");
    if (o.pass)
        o.detail = "0 violations in " + std::to_string(checks) + " sampled-gradient checks";
}

// ---------------------------------------------------------------------------
// 3. Grid search inside certified radii of a trained net finds no flips.
// ---------------------------------------------------------------------------
void criterion_grid_soundness(Outcome& o) {
    Dataset ds = make_dataset("two_moons", 1000, 0.1, 42);
    TrainConfig tc = desk_train_config();
    tc.total_epochs = 30;
    tc.seed = 0;
    Network theta0 = Network::init({2, 16, 16, 2}, 0);
    TrainResult tr = adversarial_train(theta0, nullptr, ds.train(), ds.val(), tc);
    require(o, !tr.diverged, "training diverged");

    std::vector<Sample> pts = ds.test();
    pts.resize(64);
    std::size_t violations = 0, certified = 0;
    for (NormPair pair : {NormPair::l2(), NormPair::linf()}) {
        for (const Sample& s : pts) {
            LipschitzCertificate cert = certified_radius(tr.net, nullptr, s.x, pair);
            if (!(cert.radius > 0.0) || !std::isfinite(cert.radius)) continue;
            ++certified;
            violations +=
                grid_soundness_check(tr.net, nullptr, s.x, cert.radius, pair, cert.radius / 50.0);
        }
    }
    require(o, violations == 0, std::to_string(violations) + " in-radius flips");
    require(o, certified > 0, "no point had a positive certified radius");
    if (o.pass)
        o.detail = "0 flips across " + std::to_string(certified) +
                   " certified balls (64 pts x 2 norms, step r/50)";
}

// ---------------------------------------------------------------------------
// 4. Activation diagonals have unit induced norms; power iteration vs Jacobi.
// ---------------------------------------------------------------------------
void criterion_norms(Outcome& o) {
    Rng rng(4004);
    std::size_t exact = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t n = 1 + rng.below(16);
        Matrix d(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) d(i, i) = static_cast<double>(rng.below(2));
        std::size_t forced = rng.below(n);  // every pattern keeps at least one active unit
        d(forced, forced) = 1.0;
        exact += (spectral_norm(d) == 1.0 && inf_induced_norm(d) == 1.0);
    }
    require(o, exact == 1000,
            std::to_string(1000 - exact) + " diagonals missed exact unit norms");

    double max_rel = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t rows = 1 + rng.below(16), cols = 1 + rng.below(16);
        Matrix w(rows, cols);
        for (double& v : w.data) v = rng.uniform(-2.0, 2.0);
        double power = spectral_norm(w);
        double jac = oracle::jacobi_spectral(w);
        max_rel = std::max(max_rel, std::abs(power - jac) / std::max(jac, 1e-12));
    }
    require(o, max_rel <= 1e-6, "power vs jacobi rel gap " + fmt(max_rel));
    if (o.pass)
        o.detail = "1000/1000 diagonals exact; power-vs-jacobi rel gap " + fmt(max_rel);
}

// ---------------------------------------------------------------------------
// 5. Pruning selections match independent sort-based oracles.
// ---------------------------------------------------------------------------
void criterion_pruning(Outcome& o) {
    Rng rng(5005);
    for (int trial = 0; trial < 50; ++trial) {
        Network net = oracle::random_network(rng, 6, 4);
        Mask mask_in = oracle::random_mask(rng, net, 0.2);
        double p = rng.uniform(5.0, 35.0);
        bool incl = rng.below(2) == 1;

        Mask want_g = oracle::gup_oracle(net, mask_in, p, incl);
        try {
            Mask got = gup(net, mask_in, p, incl);
            require(o, got.layers == want_g.layers, "gup mismatch at trial " +
                                                        std::to_string(trial));
        } catch (const std::invalid_argument&) {
            require(o, mask_empties_layer(want_g),
                    "gup refused a prune the oracle says is safe (trial " +
                        std::to_string(trial) + ")");
        }

        Mask want_l = oracle::lup_oracle(net, mask_in, p, incl);
        Mask got_l = lup(net, mask_in, p, incl);
        require(o, got_l.layers == want_l.layers,
                "lup mismatch at trial " + std::to_string(trial));
    }

    // Structured methods: exhaustive over hidden widths 2-4 and a percent grid.
    std::uint64_t seed = 100;
    for (std::size_t w1 = 2; w1 <= 4; ++w1)
        for (std::size_t w2 = 2; w2 <= 4; ++w2)
            for (double p : {10.0, 25.0, 40.0, 60.0, 80.0}) {
                Network net = Network::init({2, w1, w2, 2}, seed++);
                Mask ones = Mask::ones_like(net);

                Mask fm = fp(net, ones, p);
                std::size_t widths[2] = {w1, w2};
                for (std::size_t l = 0; l < 2; ++l) {
                    std::size_t removed = 0;
                    for (std::size_t u = 0; u < widths[l]; ++u) {
                        bool col_zero = true;
                        const Matrix& w = net.weights[l];
                        for (std::size_t i = 0; i < w.rows; ++i)
                            col_zero = col_zero && (fm.layers[l][i * w.cols + u] == 0);
                        if (!col_zero) continue;
                        ++removed;
                        const Matrix& nxt = net.weights[l + 1];
                        for (std::size_t j = 0; j < nxt.cols; ++j)
                            require(o, fm.layers[l + 1][u * nxt.cols + j] == 0,
                                    "fp left an outgoing row alive");
                    }
                    std::size_t want = static_cast<std::size_t>(
                        std::floor(p / 100.0 * static_cast<double>(widths[l])));
                    require(o, removed == want,
                            "fp removed " + std::to_string(removed) + " units, expected " +
                                std::to_string(want));
                }
                Mask fm2 = fp(net, fm, p);
                require(o, fm2.layers == fm.layers, "fp is not idempotent");

                NsResult nr = ns(net, ones, p);
                std::size_t total_hidden = w1 + w2, removed_total = 0;
                for (std::size_t l = 0; l < 2; ++l) {
                    std::size_t alive = 0;
                    for (std::size_t u = 0; u < widths[l]; ++u) {
                        bool col_zero = true;
                        const Matrix& w = net.weights[l];
                        for (std::size_t i = 0; i < w.rows; ++i)
                            col_zero = col_zero && (nr.mask.layers[l][i * w.cols + u] == 0);
                        if (col_zero)
                            ++removed_total;
                        else
                            ++alive;
                    }
                    require(o, alive >= 1, "ns emptied a hidden layer");
                }
                std::size_t target = static_cast<std::size_t>(
                    std::floor(p / 100.0 * static_cast<double>(total_hidden)));
                require(o, removed_total == target || nr.guard_warning,
                        "ns removed " + std::to_string(removed_total) + " of target " +
                            std::to_string(target) + " without raising the guard");
                double achieved = 100.0 * static_cast<double>(removed_total) /
                                  static_cast<double>(total_hidden);
                require(o, std::abs(nr.achieved_percent - achieved) < 1e-9,
                        "ns achieved_percent inconsistent with its mask");
            }
    if (o.pass) o.detail = "gup/lup match oracles on 50 nets; fp/ns structure holds on 45 cases";
}

// ---------------------------------------------------------------------------
// 6. Iterative magnitude pruning: schedule, bit-exact rewinds, monotone masks.
// ---------------------------------------------------------------------------
void criterion_lottery_schedule(Outcome& o) {
    Dataset ds = make_dataset("two_moons", 256, 0.1, 9);
    Network theta0 = Network::init({2, 16, 16, 2}, 3);

    LotteryConfig lc;
    lc.p_percent = 20.0;
    lc.iterations = 3;
    lc.epochs_per_iteration = 2;
    lc.method = PruneMethod::kGup;
    lc.train = desk_train_config();
    lc.train.batch_size = 32;
    lc.train.attack.iterations = 5;
    lc.train.seed = 3;

    LotteryResult lr = find_winning_ticket(theta0, ds.train(), ds.val(), lc);
    require(o, lr.masks.size() == 3 && lr.rewound.size() == 3, "expected three rounds");

    const std::size_t pool = 2 * 16 + 16 * 16 + 16 * 2;  // 320 weights
    std::size_t zeros = mask_zeros(lr.mask);
    double target = 0.6 * static_cast<double>(pool);
    require(o, std::abs(static_cast<double>(zeros) - target) <= 1.0,
            "final mask removed " + std::to_string(zeros) + " weights, want 192 +/- 1");

    for (std::size_t k = 0; k < lr.masks.size(); ++k) {
        if (k > 0)
            for (std::size_t l = 0; l < lr.masks[k].layers.size(); ++l)
                for (std::size_t j = 0; j < lr.masks[k].layers[l].size(); ++j)
                    if (lr.masks[k].layers[l][j] == 1)
                        require(o, lr.masks[k - 1].layers[l][j] == 1,
                                "mask resurrected a weight in round " + std::to_string(k + 1));
        Network want = apply_mask(theta0, &lr.masks[k]);
        require(o, nets_bit_equal(lr.rewound[k], want),
                "round " + std::to_string(k + 1) + " rewind is not bit-exact");
    }
    require(o, nets_bit_equal(lr.ticket, lr.rewound.back()), "ticket != final rewind");
    if (o.pass)
        o.detail = "3 rounds at 20% reach " + std::to_string(zeros) +
                   "/320 removed; rewinds bit-exact, masks monotone";
}

// ---------------------------------------------------------------------------
// 7. A 60%-sparse ticket retrains to within 5 points of dense robustness.
// ---------------------------------------------------------------------------
void criterion_ticket_robustness(Outcome& o) {
    Dataset ds = make_dataset("two_moons", 1000, 0.1, 42);
    AttackConfig eval_cfg = eval_attack_100();
    double max_gap = 0.0;
    std::string per_seed;
    for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
        Network theta0 = Network::init({2, 16, 16, 2}, seed);
        TrainConfig tc = desk_train_config();
        tc.seed = seed;

        TrainResult dense = adversarial_train(theta0, nullptr, ds.train(), ds.val(), tc);
        require(o, !dense.diverged, "dense run diverged");

        LotteryConfig lc;
        lc.p_percent = 20.0;
        lc.iterations = 3;
        lc.epochs_per_iteration = 20;
        lc.method = PruneMethod::kGup;
        lc.train = tc;
        LotteryResult lr = find_winning_ticket(theta0, ds.train(), ds.val(), lc);

        TrainConfig tt = tc;
        tt.seed = derive_seed(seed, 0x74696b74ull);
        TrainResult ticket = train_ticket(lr.ticket, lr.mask, ds.train(), ds.val(), tt);
        require(o, !ticket.diverged, "ticket run diverged");

        EvalResult ed = evaluate(dense.net, nullptr, ds.test(), eval_cfg,
                                 derive_seed(seed, 0x65766c61ull));
        EvalResult et = evaluate(ticket.net, &lr.mask, ds.test(), eval_cfg,
                                 derive_seed(seed, 0x65766c61ull, 1));
        double gap = std::abs(ed.adversarial_accuracy - et.adversarial_accuracy);
        max_gap = std::max(max_gap, gap);
        require(o, gap <= 0.05,
                "seed " + std::to_string(seed) + " gap " + fmt(gap) + " > 0.05");
        if (!per_seed.empty()) per_seed += ", ";
        per_seed += fmt(ed.adversarial_accuracy) + "->" + fmt(et.adversarial_accuracy);
    }
    if (o.pass)
        o.detail = "adv acc dense->ticket per seed: " + per_seed + "; max gap " + fmt(max_gap);
}

// ---------------------------------------------------------------------------
// 8. Inheritance composition is bit-exact; three-seed comparison vs baseline.
// ---------------------------------------------------------------------------
void criterion_inheritance(Outcome& o) {
    Rng rng(8008);
    for (int trial = 0; trial < 20; ++trial) {
        Network theta0 = oracle::random_network(rng, 6, 4, true);
        Network trained = theta0;
        for (Matrix& w : trained.weights)
            for (double& v : w.data) v = rng.uniform(-2.0, 2.0);
        for (auto& s : trained.scaling)
            for (double& g : s) g = rng.uniform(0.2, 1.5);
        Mask mask = oracle::random_mask(rng, theta0, 0.3);

        Network composed = compose_inheritance(trained, mask, theta0);
        for (std::size_t l = 0; l < composed.weights.size(); ++l)
            for (std::size_t k = 0; k < composed.weights[l].data.size(); ++k) {
                double want = mask.layers[l][k] ? trained.weights[l].data[k]
                                                : theta0.weights[l].data[k];
                require(o, bits_equal(composed.weights[l].data[k], want),
                        "composed weight differs at trial " + std::to_string(trial));
            }
        for (std::size_t l = 0; l < composed.scaling.size(); ++l)
            for (std::size_t k = 0; k < composed.scaling[l].size(); ++k)
                require(o, bits_equal(composed.scaling[l][k], trained.scaling[l][k]),
                        "composed scaling not taken from the trained net");
    }

    Dataset ds = make_dataset("two_moons", 400, 0.1, 42);
    AttackConfig eval_cfg = eval_attack_100();
    int l1_better = 0;
    for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
        Network theta0 = Network::init({2, 16, 16, 2}, seed);
        TrainConfig tc = desk_train_config();
        tc.seed = seed;

        IwiConfig ic;
        ic.lottery.p_percent = 20.0;
        ic.lottery.iterations = 3;
        ic.lottery.epochs_per_iteration = 10;
        ic.lottery.method = PruneMethod::kGup;
        ic.lottery.train = tc;
        ic.finetune_epochs = 40;
        ic.continuation = tc;
        ic.continuation.total_epochs = 20;
        ic.continuation.allow_short_schedule = true;
        IwiResult iwi = inverse_weights_inheritance(theta0, ds.train(), ds.val(), ic);

        TrainConfig bc = tc;
        bc.seed = derive_seed(seed, 0x62617365ull);
        TrainResult base = baseline_train(theta0, ds.train(), ds.val(), bc, iwi.total_epochs);
        require(o, !base.diverged, "baseline diverged");

        auto arm = [&](const std::string& name, const Network& net,
                       std::uint64_t tag) {
            ArmRecord a;
            a.name = name;
            EvalResult er = evaluate(net, nullptr, ds.test(), eval_cfg, derive_seed(seed, tag));
            a.clean_acc = er.clean_accuracy;
            a.adv_acc = er.adversarial_accuracy;
            SparsityReport sr = sparsity_report(net, nullptr);
            a.l1_norm = sr.global.l1;
            a.l2_norm = sr.global.l2;
            a.hist = weight_histogram(net, nullptr, 41, -1.0, 1.0);
            return a;
        };
        CompareReport cmp = compare_report(arm("baseline", base.net, 0x61636261ull),
                                           arm("iwi", iwi.network, 0x61636269ull));
        if (cmp.delta_l1 <= 0.0) ++l1_better;
    }
    if (o.pass)
        o.detail = "composition bit-exact on 20 nets; L1 lower than baseline in " +
                   std::to_string(l1_better) + "/3 seeds (recorded, not gated)";
}

// ---------------------------------------------------------------------------
// 9. Linear-model distortion search lands on the closed-form flip radius.
// ---------------------------------------------------------------------------
void criterion_linear_distortion(Outcome& o) {
    Rng rng(9009);
    DistortionSearchConfig dc;
    dc.epsilon_max = 1.0;
    dc.resolution = 1e-3;
    dc.inner.iterations = 60;
    dc.inner.step_size = 0.02;

    int accepted = 0;
    double max_diff = 0.0;
    int guard = 0;
    while (accepted < 25 && ++guard < 4000) {
        std::size_t d = 2 + rng.below(3);
        Network net = Network::init({d, 2}, rng.next_u64());
        for (double& v : net.weights[0].data) v = rng.uniform(-1.0, 1.0);
        std::vector<double> x = oracle::random_input(rng, d);
        int yhat = predicted_class(forward(net, nullptr, x));
        if (yhat < 0) continue;
        double closed = oracle::linear_flip_distance(net.weights[0], x, yhat);
        if (!(closed > 0.02 && closed < 0.45)) continue;
        ++accepted;

        std::optional<double> found =
            distortion_bound(net, nullptr, x, yhat, dc, derive_seed(9009, accepted));
        require(o, found.has_value(), "search missed a reachable flip");
        if (found) {
            double diff = std::abs(*found - closed);
            max_diff = std::max(max_diff, diff);
            require(o, diff <= dc.resolution + 1e-9,
                    "estimate off by " + fmt(diff) + " (> one resolution)");
        }
    }
    require(o, accepted == 25, "only found " + std::to_string(accepted) + " usable models");
    if (o.pass)
        o.detail = "25 linear models; max |estimate - closed form| " + fmt(max_diff) +
                   " <= resolution 1e-3";
}

// ---------------------------------------------------------------------------
// 10. The decade lr schedule and the plateau controller behave exactly.
// ---------------------------------------------------------------------------
void criterion_schedules(Outcome& o) {
    const double lr0 = 0.1;
    for (int total = 1; total <= 1000 && o.pass; ++total)
        for (int epoch = 0; epoch < total; ++epoch) {
            double want = lr0 * std::pow(10.0, -static_cast<double>((3 * epoch) / total));
            double got = lr_schedule_stop_e(total, lr0, epoch);
            if (std::abs(got - want) > 1e-12 * want) {
                require(o, false,
                        "total " + std::to_string(total) + " epoch " + std::to_string(epoch));
                break;
            }
        }
    // The canonical 240-epoch run decays exactly at epochs 80 and 160.
    require(o, lr_schedule_stop_e(240, lr0, 79) == lr0, "240: early epochs must stay at lr0");
    require(o,
            lr_schedule_stop_e(240, lr0, 80) < lr0 &&
                std::abs(lr_schedule_stop_e(240, lr0, 80) - lr0 / 10.0) < 1e-15,
            "240: first decay must land on epoch 80");
    require(o, std::abs(lr_schedule_stop_e(240, lr0, 159) - lr0 / 10.0) < 1e-15,
            "240: second decade must hold through 159");
    require(o, std::abs(lr_schedule_stop_e(240, lr0, 160) - lr0 / 100.0) < 1e-15,
            "240: second decay must land on epoch 160");

    using Action = StopCController::Action;
    {  // constant loss: decay after each patience window, then stop
        StopCController c(10, 1e-3, 2);
        for (int e = 0; e < 31; ++e) {
            Action a = c.observe(1.0);
            Action want = (e == 10 || e == 20) ? Action::kDecay
                          : (e == 30)          ? Action::kStop
                                               : Action::kContinue;
            require(o, a == want, "constant trace diverged at observation " + std::to_string(e));
        }
        require(o, c.decays() == 2, "constant trace decay count");
    }
    {  // an improvement of exactly threshold*|best| counts as stagnation
        StopCController c(2, 0.1, 1);
        const Action want[] = {Action::kContinue, Action::kContinue, Action::kDecay,
                               Action::kContinue, Action::kStop};
        const double losses[] = {1.0, 0.9, 0.9, 0.9, 0.9};
        for (int e = 0; e < 5; ++e)
            require(o, c.observe(losses[e]) == want[e],
                    "boundary trace diverged at observation " + std::to_string(e));
    }
    {  // strict improvements never decay
        StopCController c(3, 0.1, 2);
        double loss = 1.0;
        for (int e = 0; e < 30; ++e) {
            require(o, c.observe(loss) == Action::kContinue, "improving trace must continue");
            loss *= 0.88;
        }
        require(o, c.decays() == 0, "improving trace decay count");
    }
    if (o.pass) o.detail = "decade schedule exact through 1000 epochs; controller traces exact";
}

// ---------------------------------------------------------------------------
// 11. Reproducible digests, bit-exact checkpoints, and the IDX loader.
// ---------------------------------------------------------------------------
void criterion_reproducibility(Outcome& o) {
    oracle::TempDir td("acceptance_repro");

    ExperimentConfig cfg;
    cfg.pipeline = "train";
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
    cfg.seeds = {0, 1};
    cfg.out_dir = td.file("runA");
    nlohmann::json a = run_experiment(cfg);
    cfg.out_dir = td.file("runB");
    nlohmann::json b = run_experiment(cfg);
    require(o, a["ok"].get<bool>() && b["ok"].get<bool>(), "experiment run reported errors");
    require(o, a["summary_digest"] == b["summary_digest"], "summary digests differ across runs");
    for (std::size_t i = 0; i < 2; ++i)
        require(o, a["seeds"][i]["metrics_digest"] == b["seeds"][i]["metrics_digest"],
                "per-seed metric digests differ");

    Rng rng(1111);
    Network net = oracle::random_network(rng, 6, 4, true);
    Mask mask = oracle::random_mask(rng, net, 0.3);
    const std::string ck_path = td.file("roundtrip.ckpt");
    save_checkpoint(net, &mask, ck_path, 123, "feedface01234567");
    Checkpoint ck = load_checkpoint(ck_path);
    require(o, nets_bit_equal(ck.net, net), "checkpoint round-trip altered the network");
    require(o, ck.mask && ck.mask->layers == mask.layers, "checkpoint round-trip lost the mask");
    require(o, ck.seed && *ck.seed == 123, "checkpoint round-trip lost the seed");
    require(o, ck.config_digest && *ck.config_digest == "feedface01234567",
            "checkpoint round-trip lost the digest");

    const std::string img = td.file("fixture-images-idx3"), lab = td.file("fixture-labels-idx1");
    write_idx_fixture(img, lab,
                      {{0, 128, 255, 64}, {1, 2, 3, 4}, {10, 20, 30, 40}, {5, 5, 5, 5}},
                      {7, 0, 3, 1});
    Dataset ds = load_mnist_idx(img, lab);
    std::vector<double> want0 = {0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0};
    std::vector<double> want1 = {1.0 / 255.0, 2.0 / 255.0, 3.0 / 255.0, 4.0 / 255.0};
    require(o, ds.samples.size() == 4, "fixture sample count");
    require(o, ds.samples[0].x == want0 && ds.samples[0].label == 7, "sample 0 decoded wrong");
    require(o, ds.samples[1].x == want1 && ds.samples[1].label == 0, "sample 1 decoded wrong");
    require(o,
            ds.train_idx.size() == 2 && ds.val_idx.size() == 1 && ds.test_idx.size() == 1,
            "fixture split sizes");
    if (o.pass) o.detail = "digests equal; checkpoint bit-exact; idx fixture decoded exactly";
}

}  // namespace

int main() {
    bool ok = true;
    ok &= run_criterion(1, "backprop matches central finite differences", 5.0,
                        criterion_gradients);
    ok &= run_criterion(2, "sampled lipschitz never exceeds certified bound", 30.0,
                        criterion_lipschitz_dominance);
    ok &= run_criterion(3, "no adversarial flip inside certified radii", 60.0,
                        criterion_grid_soundness);
    ok &= run_criterion(4, "activation diagonals and spectral norms", 10.0, criterion_norms);
    ok &= run_criterion(5, "pruning selections match sort oracles", 10.0, criterion_pruning);
    ok &= run_criterion(6, "pruning schedule, rewinds, and mask monotonicity", 60.0,
                        criterion_lottery_schedule);
    ok &= run_criterion(7, "sparse ticket tracks dense robustness", 300.0,
                        criterion_ticket_robustness);
    ok &= run_criterion(8, "inheritance composition and seed comparison", 600.0,
                        criterion_inheritance);
    ok &= run_criterion(9, "linear distortion matches closed form", 5.0,
                        criterion_linear_distortion);
    ok &= run_criterion(10, "lr schedule and plateau controller traces", 1.0,
                        criterion_schedules);
    ok &= run_criterion(11, "digest reproducibility, checkpoints, idx loader", 5.0,
                        criterion_reproducibility);
    if (!ok) std::printf("acceptance: at least one criterion failed\n");
    return ok ? 0 : 1;
}
