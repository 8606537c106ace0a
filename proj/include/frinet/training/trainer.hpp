// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "frinet/decoder/decoder.hpp"
#include "frinet/io/checkpoint.hpp"
#include "frinet/ndgrad/adam.hpp"
#include "frinet/preprocess/input_image.hpp"
#include "frinet/synthgen/synthgen.hpp"
#include "frinet/training/losses.hpp"
#include "frinet/vectorize/floorplan.hpp"

namespace frinet::training {

using decoder::Stage;

struct StageConfig {
    int id = 1; ///< 1: axis-only S⁺, 2: full S⁺, 3: full S*
    int epochs = 120;
    std::size_t batch = 8;
    double lr = 2e-4;
    double decay_fraction = 0.3; ///< final fraction of epochs run at lr·decay_factor
    double decay_factor = 0.1;
    /// Learning-rate multiplier for the selection matrix T and the weights W.
    double structure_lr_scale = 1.0;

    double lr_at(int epoch) const {
        const int decay_start = int(std::lround(double(epochs) * (1.0 - decay_fraction)));
        return epoch >= decay_start ? lr * decay_factor : lr;
    }
};

struct TrainConfig {
    decoder::DecoderConfig decoder;
    std::size_t m = 20;
    std::size_t query_points = 2048;
    std::array<StageConfig, 3> stages{StageConfig{1}, StageConfig{2}, StageConfig{3}};
    double weight_decay = 1e-4;
    double gamma = 0.01;
    /// Learning-rate multiplier for per-scene latent codes.
    double code_lr_scale = 1.0;
    /// false: the first stage already trains every bank (no axis-only phase).
    bool staged = true;
    std::uint64_t seed = 0;
    int jobs = 1;

    /// Full-size schedule: 600 epochs per stage, batch 16, lr 2e-4.
    static TrainConfig full_scale() {
        TrainConfig c;
        c.decoder.q = 256;
        c.decoder.l = 256;
        c.decoder.u = 64;
        c.query_points = 4096;
        for (int s = 0; s < 3; ++s) c.stages[s] = StageConfig{s + 1, 600, 16, 2e-4};
        return c;
    }

    /// Desk-scale schedule for small synthetic corpora on one CPU core:
    /// 120 epochs per stage, batch 8, n = 2048, small line banks, and faster
    /// learning rates for the shorter run. Lines start and train at larger
    /// magnitudes: the S* hinge pulls each edge inward by about 1/|normal|.
    static TrainConfig desk_scale() {
        TrainConfig c;
        c.decoder.q = 64;
        c.decoder.l = 16;
        c.decoder.u = 8;
        c.decoder.output_gain = 32.0;
        c.decoder.init_line_magnitude = 24.0;
        c.query_points = 2048;
        c.code_lr_scale = 10.0;
        for (int s = 0; s < 3; ++s) c.stages[s] = StageConfig{s + 1, 120, 8, 1e-3};
        c.stages[2].structure_lr_scale = 5.0;
        return c;
    }
};

struct TrainSample {
    std::string scene_id;
    vectorize::Floorplan gt;
    const preprocess::InputImage* image = nullptr;
};

template <typename T>
using CodeProvider = std::function<ndgrad::Var<T>(ndgrad::Binding<T>&, const TrainSample&)>;

struct StepLog {
    long step = 0;
    int stage = 0;
    int epoch = 0;
    LossTerms terms;
};

class NonFiniteLoss : public std::runtime_error {
  public:
    NonFiniteLoss(const std::string& what, std::string checkpoint)
        : std::runtime_error(what), checkpoint_(std::move(checkpoint)) {}
    const std::string& checkpoint() const { return checkpoint_; }

  private:
    std::string checkpoint_;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ull + (b << 6) + (b >> 2);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline Stage stage_mode(const TrainConfig& cfg, int stage_id) {
    return stage_id == 1 && cfg.staged ? Stage::axis_only : Stage::full;
}
inline decoder::Assembly stage_assembly(int stage_id) {
    return stage_id == 3 ? decoder::Assembly::star : decoder::Assembly::plus;
}

template <typename T>
struct SceneStep {
    std::map<std::string, ndgrad::Array2<T>> grads;
    LossTerms terms;
    std::vector<std::size_t> assignment;
};

/// One scene's forward/backward for the given stage and query set.
template <typename T>
SceneStep<T> scene_step(ndgrad::ParamSet<T>& params, const CodeProvider<T>& codes_of, const TrainSample& sample,
                        const TrainConfig& cfg, int stage_id, const ndgrad::Array2<T>& X) {
    ndgrad::Tape<T> tape;
    ndgrad::Binding<T> bind(tape, params);
    ndgrad::Var<T> codes = codes_of(bind, sample);
    const auto assembly = stage_assembly(stage_id);
    auto out = decoder::decode_rooms(bind, codes, tape.constant(X), cfg.decoder, stage_mode(cfg, stage_id), assembly);

    const ndgrad::Array2<T> gt = pad_gt(synthgen::gen_occupancy(sample.gt, X), cfg.m);
    std::vector<ndgrad::Array2<T>> S;
    for (const auto& s : out.occupancy) S.push_back(s.value());
    SceneStep<T> r;
    r.assignment = match_rooms(S, gt, assembly);

    LossResult<T> loss = assembly == decoder::Assembly::plus
                             ? loss_plus(out.occupancy, gt, r.assignment, bind(decoder::kSelection), bind(decoder::kConvexWeights))
                             : loss_star(out.occupancy, gt, r.assignment, bind(decoder::kSelection), T(cfg.gamma));
    r.terms = loss.terms;
    if (!std::isfinite(r.terms.total())) return r;
    tape.backward(loss.total);
    r.grads = bind.gradients();
    return r;
}

/// Three-stage optimization over a fixed corpus.
template <typename T>
class Trainer {
  public:
    Trainer(TrainConfig cfg, ndgrad::ParamSet<T>& params, CodeProvider<T> codes, std::vector<TrainSample> data)
        : cfg_(std::move(cfg)), params_(params), codes_(std::move(codes)), data_(std::move(data)) {
        if (data_.empty()) throw std::invalid_argument("Trainer: empty dataset");
        for (const auto& s : data_) {
            if (s.gt.rooms.size() > cfg_.m) {
                throw std::invalid_argument("Trainer: scene '" + s.scene_id + "' has more rooms than m");
            }
        }
    }

    /// Directory receiving stage checkpoints (stage1, stage2, stage3) and loss.csv.
    void set_output_dir(std::filesystem::path dir) { out_dir_ = std::move(dir); }
    void set_progress(std::function<void(const StepLog&)> cb) { progress_ = std::move(cb); }

    void run() {
        for (const auto& st : cfg_.stages) run_stage(st);
    }

    void run_stage(const StageConfig& st) {
        ndgrad::AdamConfig acfg;
        acfg.lr = st.lr;
        acfg.weight_decay = cfg_.weight_decay;
        ndgrad::Adam<T> adam(acfg);
        adam.set_lr_scale("table.", cfg_.code_lr_scale);
        adam.set_lr_scale(decoder::kSelection, st.structure_lr_scale);
        adam.set_lr_scale(decoder::kConvexWeights, st.structure_lr_scale);

        std::vector<std::size_t> order(data_.size());
        for (int epoch = 0; epoch < st.epochs; ++epoch) {
            adam.config().lr = st.lr_at(epoch);
            std::iota(order.begin(), order.end(), std::size_t(0));
            std::mt19937_64 shuf(mix_seed(cfg_.seed, mix_seed(std::uint64_t(st.id), std::uint64_t(epoch))));
            std::shuffle(order.begin(), order.end(), shuf);
            for (std::size_t b0 = 0; b0 < order.size(); b0 += st.batch) {
                const std::size_t b1 = std::min(order.size(), b0 + st.batch);
                step(adam, st, epoch, std::vector<std::size_t>(order.begin() + std::ptrdiff_t(b0), order.begin() + std::ptrdiff_t(b1)));
            }
        }
        if (!out_dir_.empty()) {
            last_checkpoint_ = (out_dir_ / ("stage" + std::to_string(st.id))).string();
            io::save_checkpoint(last_checkpoint_, params_, {{"stage", st.id}, {"seed", cfg_.seed}});
            write_log();
        }
    }

    const std::vector<StepLog>& log() const { return log_; }
    const std::string& last_checkpoint() const { return last_checkpoint_; }

    /// Mean total loss per epoch of one stage.
    std::vector<double> epoch_means(int stage_id) const {
        std::map<int, std::pair<double, int>> acc;
        for (const auto& l : log_) {
            if (l.stage != stage_id) continue;
            auto& a = acc[l.epoch];
            a.first += l.terms.total();
            a.second += 1;
        }
        std::vector<double> out;
        for (const auto& [_, a] : acc) out.push_back(a.first / a.second);
        return out;
    }

    void write_log() const {
        if (out_dir_.empty()) return;
        std::filesystem::create_directories(out_dir_);
        std::ofstream os(out_dir_ / "loss.csv");
        os << "step,stage,L_rec,L_T,L_W\n";
        os << std::setprecision(10);
        for (const auto& l : log_) {
            os << l.step << ',' << l.stage << ',' << l.terms.rec << ',' << l.terms.selection << ',' << l.terms.weights << '\n';
        }
    }

    /// Query points used for the given step and batch slot.
    ndgrad::Array2<T> query_points(int stage_id, long step, std::size_t slot) const {
        std::mt19937_64 rng(mix_seed(mix_seed(cfg_.seed, std::uint64_t(stage_id) * 7919u + slot), std::uint64_t(step)));
        return decoder::QuerySet<T>::uniform(cfg_.query_points, rng).X;
    }

  private:
    void step(ndgrad::Adam<T>& adam, const StageConfig& st, int epoch, const std::vector<std::size_t>& batch) {
        std::vector<SceneStep<T>> results(batch.size());
        auto work = [&](std::size_t i) {
            results[i] = scene_step(params_, codes_, data_[batch[i]], cfg_, st.id, query_points(st.id, step_, i));
        };
        if (cfg_.jobs > 1 && batch.size() > 1) {
            std::vector<std::thread> pool;
            for (std::size_t t = 0; t < std::size_t(cfg_.jobs); ++t) {
                pool.emplace_back([&, t] {
                    for (std::size_t i = t; i < batch.size(); i += std::size_t(cfg_.jobs)) work(i);
                });
            }
            for (auto& th : pool) th.join();
        } else {
            for (std::size_t i = 0; i < batch.size(); ++i) work(i);
        }

        StepLog entry{step_, st.id, epoch, {}};
        const double inv = 1.0 / double(batch.size());
        for (const auto& r : results) {
            entry.terms.rec += r.terms.rec * inv;
            entry.terms.selection += r.terms.selection * inv;
            entry.terms.weights += r.terms.weights * inv;
        }
        if (!std::isfinite(entry.terms.total())) {
            write_log();
            throw NonFiniteLoss("non-finite loss at step " + std::to_string(step_) + " (stage " + std::to_string(st.id) + ")",
                                last_checkpoint_);
        }
        params_.zero_grad();
        for (const auto& r : results) {
            for (const auto& [name, g] : r.grads) {
                ndgrad::Array2<T> scaled = g;
                for (auto& v : scaled) v *= T(inv);
                params_.at(name).accumulate(scaled);
            }
        }
        adam.step(params_);
        log_.push_back(entry);
        if (progress_) progress_(entry);
        ++step_;
    }

    TrainConfig cfg_;
    ndgrad::ParamSet<T>& params_;
    CodeProvider<T> codes_;
    std::vector<TrainSample> data_;
    std::filesystem::path out_dir_;
    std::function<void(const StepLog&)> progress_;
    std::vector<StepLog> log_;
    std::string last_checkpoint_;
    long step_ = 0;
};

} // namespace frinet::training
