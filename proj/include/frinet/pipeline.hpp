// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "frinet/encoder/latent_table.hpp"
#include "frinet/encoder/tiny_encoder.hpp"
#include "frinet/metrics/metrics.hpp"
#include "frinet/preprocess/input_image.hpp"
#include "frinet/preprocess/segmentation.hpp"
#include "frinet/synthgen/synthgen.hpp"
#include "frinet/training/trainer.hpp"
#include "frinet/vectorize/vectorize.hpp"

// End-to-end helpers shared by the command-line tool and the test suites:
// synthetic corpora, training in either encoder mode, inference, evaluation.

namespace frinet::pipeline {

enum class EncoderMode { table, tiny };

struct Scene {
    std::string id;
    vectorize::Floorplan gt;
    preprocess::InputImage image;
};

inline std::string scene_id(std::size_t index) {
    std::ostringstream os;
    os << "scene_" << std::setw(4) << std::setfill('0') << index;
    return os.str();
}

/// `count` scenes from seeds base_seed, base_seed+1, ...
inline std::vector<Scene> synth_corpus(std::size_t count, std::uint64_t base_seed, const synthgen::SynthSpec& spec) {
    std::vector<Scene> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        auto s = synthgen::gen_scene(base_seed + i, spec);
        out.push_back({scene_id(i), std::move(s.floorplan), std::move(s.image)});
    }
    return out;
}

/// The toy corpus: 1–3 rooms, diagonal_cut_prob 0.3, floorplans only.
inline synthgen::SynthSpec toy_spec(bool with_images = false) {
    synthgen::SynthSpec spec;
    spec.min_rooms = 1;
    spec.max_rooms = 3;
    spec.diagonal_cut_prob = 0.3;
    spec.make_cloud = with_images;
    spec.make_image = with_images;
    return spec;
}

struct Model {
    training::TrainConfig cfg;
    EncoderMode mode = EncoderMode::table;
    encoder::EncoderConfig encoder;
    ndgrad::ParamSet<float> params;
};

inline encoder::EncoderConfig encoder_config_for(const training::TrainConfig& cfg) {
    encoder::EncoderConfig e;
    e.m = cfg.m;
    e.q = cfg.decoder.q;
    return e;
}

/// Fresh decoder parameters plus either per-scene latent codes or the image encoder.
inline Model init_model(const training::TrainConfig& cfg, EncoderMode mode, const std::vector<Scene>& scenes) {
    Model model;
    model.cfg = cfg;
    model.mode = mode;
    model.encoder = encoder_config_for(cfg);
    decoder::init_decoder_params(model.params, cfg.decoder, training::mix_seed(cfg.seed, 1));
    if (mode == EncoderMode::table) {
        encoder::LatentTable<float> table(cfg.m, cfg.decoder.q, training::mix_seed(cfg.seed, 2));
        for (const auto& s : scenes) table.register_scene(model.params, s.id);
    } else {
        encoder::init_encoder_params(model.params, model.encoder, training::mix_seed(cfg.seed, 3));
    }
    return model;
}

inline training::CodeProvider<float> code_provider(const Model& model) {
    if (model.mode == EncoderMode::table) {
        return [](ndgrad::Binding<float>& bind, const training::TrainSample& s) {
            return bind(encoder::LatentTable<float>::key(s.scene_id));
        };
    }
    const encoder::EncoderConfig ecfg = model.encoder;
    return [ecfg](ndgrad::Binding<float>& bind, const training::TrainSample& s) {
        if (!s.image) throw std::invalid_argument("tiny encoder needs an input image for scene '" + s.scene_id + "'");
        return encoder::encode(bind, bind.tape().constant(encoder::image_matrix<float>(*s.image)), ecfg);
    };
}

/// Runs the three stages in place on model.params.
inline training::Trainer<float> make_trainer(Model& model, const std::vector<Scene>& scenes) {
    std::vector<training::TrainSample> data;
    data.reserve(scenes.size());
    for (const auto& s : scenes) data.push_back({s.id, s.gt, &s.image});
    return training::Trainer<float>(model.cfg, model.params, code_provider(model), std::move(data));
}

/// Codes of one scene under the model's encoder mode.
inline ndgrad::Array2<double> scene_codes(const Model& model, const ndgrad::ParamSet<double>& params, const Scene& s) {
    if (model.mode == EncoderMode::table) {
        const auto key = encoder::LatentTable<double>::key(s.id);
        if (!params.contains(key)) throw std::out_of_range("no latent codes for scene '" + s.id + "'");
        return params.at(key).value;
    }
    return encoder::encode(params, s.image, model.encoder);
}

/// Floorplans for every scene; extraction runs in double precision.
inline std::vector<vectorize::Floorplan> infer(const Model& model, const std::vector<Scene>& scenes,
                                               const vectorize::ExtractConfig& ecfg = {}) {
    const auto params = model.params.cast<double>();
    std::vector<vectorize::Floorplan> out;
    for (const auto& s : scenes) {
        auto fp = vectorize::extract_floorplan(params, scene_codes(model, params, s), model.cfg.decoder, ecfg, s.gt.transform);
        out.push_back(std::move(fp));
    }
    return out;
}

struct CorpusReport {
    metrics::EvalReport total;
    std::vector<metrics::EvalReport> per_scene;
};

inline CorpusReport evaluate(const std::vector<vectorize::Floorplan>& pred, const std::vector<Scene>& scenes,
                             const metrics::EvalConfig& cfg = {}) {
    if (pred.size() != scenes.size()) throw std::invalid_argument("evaluate: prediction count differs from scene count");
    CorpusReport r;
    std::vector<std::size_t> gt_rooms;
    for (std::size_t i = 0; i < scenes.size(); ++i) {
        r.per_scene.push_back(metrics::evaluate(pred[i], scenes[i].gt, cfg));
        gt_rooms.push_back(scenes[i].gt.rooms.size());
    }
    r.total = metrics::aggregate(r.per_scene, gt_rooms);
    return r;
}

struct PreprocessConfig {
    preprocess::SegmentationConfig segmentation;
    preprocess::RansacConfig ransac;
    preprocess::ImageConfig image;
};

/// Normals, region growing, per-region RANSAC, then rasterization. A given
/// transform (e.g. the frame of a known ground-truth floorplan) overrides
/// the fitted one.
inline preprocess::InputImage preprocess_cloud(preprocess::PointCloud cloud, const PreprocessConfig& cfg = {},
                                               std::optional<geometry::ImageTransform> transform = std::nullopt,
                                               std::vector<preprocess::WallSegment>* walls_out = nullptr) {
    cloud.validate();
    preprocess::estimate_normals(cloud, cfg.segmentation.k, cfg.segmentation.grid_cell);
    const auto regions = preprocess::segment_regions(cloud, cfg.segmentation);
    auto walls = preprocess::extract_wall_planes(regions, cloud, cfg.ransac);
    auto img = preprocess::build_input_image(cloud, walls, transform, cfg.image);
    if (walls_out) *walls_out = std::move(walls);
    return img;
}

inline nlohmann::json decoder_config_json(const decoder::DecoderConfig& d) {
    return {{"q", d.q},
            {"l", d.l},
            {"u", d.u},
            {"output_gain", d.output_gain},
            {"init_line_magnitude", d.init_line_magnitude},
            {"final_layer_init_std", d.final_layer_init_std},
            {"selection_init_std", d.selection_init_std}};
}

inline decoder::DecoderConfig decoder_config_from_json(const nlohmann::json& j) {
    decoder::DecoderConfig d;
    d.q = j.at("q").get<std::size_t>();
    d.l = j.at("l").get<std::size_t>();
    d.u = j.at("u").get<std::size_t>();
    d.output_gain = j.value("output_gain", d.output_gain);
    d.init_line_magnitude = j.value("init_line_magnitude", d.init_line_magnitude);
    d.final_layer_init_std = j.value("final_layer_init_std", d.final_layer_init_std);
    d.selection_init_std = j.value("selection_init_std", d.selection_init_std);
    return d;
}

inline const char* encoder_mode_name(EncoderMode m) { return m == EncoderMode::table ? "table" : "tiny"; }

inline EncoderMode parse_encoder_mode(const std::string& s) {
    if (s == "table") return EncoderMode::table;
    if (s == "tiny") return EncoderMode::tiny;
    throw std::invalid_argument("unknown encoder mode '" + s + "'");
}

/// Everything inference needs besides the parameters.
inline nlohmann::json model_meta(const Model& model) {
    nlohmann::json stages = nlohmann::json::array();
    for (const auto& st : model.cfg.stages) {
        stages.push_back({{"id", st.id}, {"epochs", st.epochs}, {"batch", st.batch}, {"lr", st.lr},
                          {"structure_lr_scale", st.structure_lr_scale}});
    }
    return {{"decoder", decoder_config_json(model.cfg.decoder)},
            {"m", model.cfg.m},
            {"query_points", model.cfg.query_points},
            {"gamma", model.cfg.gamma},
            {"weight_decay", model.cfg.weight_decay},
            {"code_lr_scale", model.cfg.code_lr_scale},
            {"staged", model.cfg.staged},
            {"seed", model.cfg.seed},
            {"stages", stages},
            {"encoder", encoder_mode_name(model.mode)}};
}

inline Model model_from_meta(const nlohmann::json& meta, ndgrad::ParamSet<float> params) {
    Model model;
    model.cfg.decoder = decoder_config_from_json(meta.at("decoder"));
    model.cfg.m = meta.at("m").get<std::size_t>();
    model.cfg.gamma = meta.value("gamma", model.cfg.gamma);
    model.cfg.seed = meta.value("seed", std::uint64_t(0));
    model.mode = parse_encoder_mode(meta.at("encoder").get<std::string>());
    model.encoder = encoder_config_for(model.cfg);
    model.params = std::move(params);
    return model;
}

inline nlohmann::json prf_json(const metrics::PRF& p) {
    return {{"tp", p.tp}, {"fp", p.fp}, {"fn", p.fn}, {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
}

inline nlohmann::json report_json(const metrics::EvalReport& r) {
    nlohmann::json matches = nlohmann::json::array();
    for (const auto& m : r.matches) matches.push_back({{"pred", m.pred}, {"gt", m.gt}, {"iou", m.iou}});
    return {{"room", prf_json(r.room)},
            {"corner", prf_json(r.corner)},
            {"angle", prf_json(r.angle)},
            {"mean_iou", r.mean_iou},
            {"matches", matches},
            {"flags", r.flags}};
}

} // namespace frinet::pipeline
