#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "srl/attack.hpp"
#include "srl/lottery.hpp"
#include "srl/serde.hpp"
#include "srl/train.hpp"

namespace srl {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& raw, const std::string& key) {
    std::string v = trim(raw);
    std::size_t slash = v.find('/');
    try {
        std::size_t used = 0;
        if (slash != std::string::npos) {
            // fraction values like 8/255
            std::string num = trim(v.substr(0, slash)), den = trim(v.substr(slash + 1));
            double a = std::stod(num, &used);
            if (used != num.size()) throw std::invalid_argument(v);
            double b = std::stod(den, &used);
            if (used != den.size() || b == 0.0) throw std::invalid_argument(v);
            return a / b;
        }
        double a = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return a;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: key '" + key + "' has non-numeric value '" + raw + "'");
    }
}

}  // namespace detail

/// Flat dotted-key configuration (train.lr = 0.1, attack.eps = 8/255, ...).
/// Lines are `key = value`; '#' starts a comment. Consumers mark keys as they
/// read them and then reject leftovers, so typos in sweep files fail loudly.
class KvConfig {
  public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text) {
        KvConfig cfg;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            std::string t = detail::trim(line);
            if (t.empty()) continue;
            std::size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("config: line " + std::to_string(lineno) +
                                            " is not 'key = value': " + t);
            std::string key = detail::trim(t.substr(0, eq));
            std::string value = detail::trim(t.substr(eq + 1));
            if (key.empty())
                throw std::invalid_argument("config: empty key on line " + std::to_string(lineno));
            if (!cfg.values_.emplace(key, value).second)
                throw std::invalid_argument("config: duplicate key '" + key + "'");
        }
        return cfg;
    }

    static KvConfig parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open " + path);
        std::ostringstream buf;
        buf << in.rdbuf();
        return parse(buf.str());
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::string get_string(const std::string& key, const std::string& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        return it->second;
    }

    double get_number(const std::string& key, double fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        return detail::parse_number(it->second, key);
    }

    int get_int(const std::string& key, int fallback) const {
        double v = get_number(key, static_cast<double>(fallback));
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw std::invalid_argument("config: key '" + key + "' must be an integer");
        return i;
    }

    std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        try {
            std::size_t used = 0;
            std::uint64_t v = std::stoull(it->second, &used);
            if (used != it->second.size()) throw std::invalid_argument(it->second);
            return v;
        } catch (const std::exception&) {
            throw std::invalid_argument("config: key '" + key + "' must be a nonnegative integer");
        }
    }

    bool get_bool(const std::string& key, bool fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        const std::string& v = it->second;
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw std::invalid_argument("config: key '" + key + "' must be true/false");
    }

    std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        consumed_.insert(key);
        std::vector<double> out;
        std::string item;
        std::istringstream ss(it->second);
        while (std::getline(ss, item, ','))
            out.push_back(detail::parse_number(item, key));
        if (out.empty()) throw std::invalid_argument("config: key '" + key + "' is an empty list");
        return out;
    }

    /// Unknown (never-consumed) keys are configuration errors.
    void reject_unconsumed() const {
        std::vector<std::string> leftover;
        for (const auto& [key, value] : values_)
            if (!consumed_.count(key)) leftover.push_back(key);
        if (!leftover.empty()) {
            std::string msg = "config: unknown key(s):";
            for (const std::string& k : leftover) msg += " '" + k + "'";
            throw std::invalid_argument(msg);
        }
    }

    const std::map<std::string, std::string>& entries() const { return values_; }

  private:
    std::map<std::string, std::string> values_;
    mutable std::set<std::string> consumed_;
};

/// Everything one experiment run needs, with the desk-scale defaults:
/// two-moons n=1000 (500/250/250), a 2-16-16-2 network, eps 0.1, step 0.025,
/// PGD-10 for training and PGD-100 for evaluation, seeds {0, 1, 2}.
struct ExperimentConfig {
    std::string pipeline = "train";  // train | prune | lottery | iwi | certify
    std::string dataset = "two_moons";
    std::size_t dataset_n = 1000;
    double dataset_noise = 0.1;
    std::uint64_t dataset_seed = 42;
    std::vector<std::size_t> dims = {2, 16, 16, 2};
    TrainConfig train;
    int eval_iters = 100;  // PGD-100 at evaluation time
    double distortion_eps_max = 1.0;
    double distortion_resolution = 1e-3;
    double lottery_p = 20.0;
    int lottery_k = 3;
    int lottery_n = 20;
    PruneMethod prune_method = PruneMethod::kGup;
    double prune_ratio = 60.0;
    int retrain_epochs = 60;
    int iwi_nf = 40;
    int continue_epochs = 20;
    bool continue_stop_c = false;
    bool resume_lr = false;
    int certify_grid_steps = 50;  // grid step = r / this
    bool certify_grid_check = false;
    double certify_r_max = 10.0;  // cap for unconstrained radii before grid checks
    std::size_t hist_bins = 41;
    double hist_lo = -1.0;
    double hist_hi = 1.0;
    std::vector<std::uint64_t> seeds = {0, 1, 2};
    std::string out_dir = "runs";

    AttackConfig eval_attack() const {
        AttackConfig a = train.attack;
        a.iterations = eval_iters;
        return a;
    }

    LotteryConfig lottery_config() const {
        LotteryConfig cfg;
        cfg.p_percent = lottery_p;
        cfg.iterations = lottery_k;
        cfg.epochs_per_iteration = lottery_n;
        cfg.train = train;
        cfg.method = prune_method;
        return cfg;
    }

    void validate() const {
        train.validate();
        if (eval_iters < 1) throw std::invalid_argument("config: eval.iters must be >= 1");
        if (dims.size() < 2) throw std::invalid_argument("config: net.dims needs >= 2 entries");
        for (std::size_t d : dims)
            if (d == 0) throw std::invalid_argument("config: net.dims entries must be positive");
        if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
        if (pipeline != "train" && pipeline != "prune" && pipeline != "lottery" &&
            pipeline != "iwi" && pipeline != "certify")
            throw std::invalid_argument("config: unknown pipeline '" + pipeline + "'");
    }

    static ExperimentConfig from_kv(const KvConfig& kv) {
        ExperimentConfig c;
        c.pipeline = kv.get_string("run.pipeline", c.pipeline);
        c.out_dir = kv.get_string("run.out", c.out_dir);
        for (double s : kv.get_list("run.seeds", {0, 1, 2})) {
            if (s < 0 || s != std::floor(s))
                throw std::invalid_argument("config: run.seeds must be nonnegative integers");
        }
        c.seeds.clear();
        for (double s : kv.get_list("run.seeds", {0, 1, 2}))
            c.seeds.push_back(static_cast<std::uint64_t>(s));

        c.dataset = kv.get_string("dataset.name", c.dataset);
        c.dataset_n = static_cast<std::size_t>(kv.get_int("dataset.n", static_cast<int>(c.dataset_n)));
        c.dataset_noise = kv.get_number("dataset.noise", c.dataset_noise);
        c.dataset_seed = kv.get_u64("dataset.seed", c.dataset_seed);

        c.dims.clear();
        for (double d : kv.get_list("net.dims", {2, 16, 16, 2})) {
            if (d < 1 || d != std::floor(d))
                throw std::invalid_argument("config: net.dims must be positive integers");
            c.dims.push_back(static_cast<std::size_t>(d));
        }

        c.train.initial_lr = kv.get_number("train.lr", c.train.initial_lr);
        c.train.momentum = kv.get_number("train.momentum", c.train.momentum);
        c.train.weight_decay = kv.get_number("train.weight_decay", c.train.weight_decay);
        c.train.batch_size =
            static_cast<std::size_t>(kv.get_int("train.batch", static_cast<int>(c.train.batch_size)));
        std::string mode = kv.get_string("train.mode", "stop_e");
        if (mode == "stop_e")
            c.train.mode = StopMode::kStopE;
        else if (mode == "stop_c")
            c.train.mode = StopMode::kStopC;
        else
            throw std::invalid_argument("config: train.mode must be stop_e or stop_c");
        c.train.total_epochs = kv.get_int("train.epochs", c.train.total_epochs);
        c.train.patience_epochs = kv.get_int("train.patience", c.train.patience_epochs);
        c.train.relative_threshold = kv.get_number("train.threshold", c.train.relative_threshold);
        c.train.max_decays = kv.get_int("train.max_decays", c.train.max_decays);
        c.train.ns_l1_lambda = kv.get_number("train.ns_l1", c.train.ns_l1_lambda);
        c.train.train_scaling = kv.get_bool("train.scaling", c.train.train_scaling);
        c.train.monitor_natural_loss =
            kv.get_bool("train.monitor_natural", c.train.monitor_natural_loss);

        c.train.attack.epsilon = kv.get_number("attack.eps", 0.1);
        c.train.attack.step_size = kv.get_number("attack.step", 0.025);
        c.train.attack.iterations = kv.get_int("attack.iters", 10);
        c.train.attack.random_start = kv.get_bool("attack.rand_start", true);
        if (kv.has("attack.clamp")) {
            std::vector<double> cl = kv.get_list("attack.clamp", {});
            if (cl.size() != 2)
                throw std::invalid_argument("config: attack.clamp must be 'lo,hi'");
            c.train.attack.clamp = {cl[0], cl[1]};
        }
        c.eval_iters = kv.get_int("eval.iters", c.eval_iters);
        c.distortion_eps_max = kv.get_number("eval.distortion_max", c.distortion_eps_max);
        c.distortion_resolution = kv.get_number("eval.distortion_resolution", c.distortion_resolution);

        c.lottery_p = kv.get_number("lottery.p", c.lottery_p);
        c.lottery_k = kv.get_int("lottery.k", c.lottery_k);
        c.lottery_n = kv.get_int("lottery.n", c.lottery_n);
        c.prune_method = prune_method_from_name(kv.get_string("prune.method", "gup"));
        c.prune_ratio = kv.get_number("prune.ratio", c.prune_ratio);
        c.retrain_epochs = kv.get_int("prune.retrain_epochs", c.retrain_epochs);
        c.iwi_nf = kv.get_int("iwi.nf", c.iwi_nf);
        c.continue_epochs = kv.get_int("iwi.continue_epochs", c.continue_epochs);
        c.continue_stop_c = kv.get_bool("iwi.stop_c", c.continue_stop_c);
        c.resume_lr = kv.get_bool("iwi.resume_lr", c.resume_lr);
        c.certify_grid_check = kv.get_bool("certify.grid_check", c.certify_grid_check);
        c.certify_grid_steps = kv.get_int("certify.grid_steps", c.certify_grid_steps);
        c.certify_r_max = kv.get_number("certify.r_max", c.certify_r_max);
        c.hist_bins = static_cast<std::size_t>(kv.get_int("hist.bins", static_cast<int>(c.hist_bins)));
        if (kv.has("hist.range")) {
            std::vector<double> hr = kv.get_list("hist.range", {});
            if (hr.size() != 2) throw std::invalid_argument("config: hist.range must be 'lo,hi'");
            c.hist_lo = hr[0];
            c.hist_hi = hr[1];
        }

        kv.reject_unconsumed();
        c.validate();
        return c;
    }

    /// Canonical flat serialization; the digest of this string identifies the
    /// configuration in every artifact the run writes.
    std::string canonical_string() const {
        std::ostringstream out;
        out << std::setprecision(17);
        out << "attack.clamp=";
        if (train.attack.clamp)
            out << train.attack.clamp->first << ',' << train.attack.clamp->second;
        out << '\n';
        out << "attack.eps=" << train.attack.epsilon << '\n';
        out << "attack.iters=" << train.attack.iterations << '\n';
        out << "attack.rand_start=" << train.attack.random_start << '\n';
        out << "attack.step=" << train.attack.step_size << '\n';
        out << "certify.grid_check=" << certify_grid_check << '\n';
        out << "certify.grid_steps=" << certify_grid_steps << '\n';
        out << "certify.r_max=" << certify_r_max << '\n';
        out << "dataset.n=" << dataset_n << '\n';
        out << "dataset.name=" << dataset << '\n';
        out << "dataset.noise=" << dataset_noise << '\n';
        out << "dataset.seed=" << dataset_seed << '\n';
        out << "eval.distortion_max=" << distortion_eps_max << '\n';
        out << "eval.distortion_resolution=" << distortion_resolution << '\n';
        out << "eval.iters=" << eval_iters << '\n';
        out << "hist.bins=" << hist_bins << '\n';
        out << "hist.range=" << hist_lo << ',' << hist_hi << '\n';
        out << "iwi.continue_epochs=" << continue_epochs << '\n';
        out << "iwi.nf=" << iwi_nf << '\n';
        out << "iwi.resume_lr=" << resume_lr << '\n';
        out << "iwi.stop_c=" << continue_stop_c << '\n';
        out << "lottery.k=" << lottery_k << '\n';
        out << "lottery.n=" << lottery_n << '\n';
        out << "lottery.p=" << lottery_p << '\n';
        out << "net.dims=";
        for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
        out << '\n';
        out << "prune.method=" << prune_method_name(prune_method) << '\n';
        out << "prune.ratio=" << prune_ratio << '\n';
        out << "prune.retrain_epochs=" << retrain_epochs << '\n';
        out << "run.pipeline=" << pipeline << '\n';
        out << "run.seeds=";
        for (std::size_t i = 0; i < seeds.size(); ++i) out << (i ? "," : "") << seeds[i];
        out << '\n';
        out << "train.batch=" << train.batch_size << '\n';
        out << "train.epochs=" << train.total_epochs << '\n';
        out << "train.lr=" << train.initial_lr << '\n';
        out << "train.max_decays=" << train.max_decays << '\n';
        out << "train.mode=" << (train.mode == StopMode::kStopE ? "stop_e" : "stop_c") << '\n';
        out << "train.momentum=" << train.momentum << '\n';
        out << "train.monitor_natural=" << train.monitor_natural_loss << '\n';
        out << "train.ns_l1=" << train.ns_l1_lambda << '\n';
        out << "train.patience=" << train.patience_epochs << '\n';
        out << "train.scaling=" << train.train_scaling << '\n';
        out << "train.threshold=" << train.relative_threshold << '\n';
        out << "train.weight_decay=" << train.weight_decay << '\n';
        return out.str();
    }

    std::string digest() const { return hex64(fnv1a(canonical_string())); }
};

}  // namespace srl
