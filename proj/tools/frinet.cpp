// SPDX-License-Identifier: Apache-2.0
// frinet: synth / preprocess / train / infer / eval / gradcheck.

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "frinet/io/checkpoint.hpp"
#include "frinet/io/cloud_io.hpp"
#include "frinet/io/floorplan_io.hpp"
#include "frinet/io/image_io.hpp"
#include "frinet/pipeline.hpp"
#include "frinet/training/gradcheck.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace frinet;

namespace {

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNonFinite = 3;

int fail(int code, const std::string& kind, const std::string& message, json extra = json::object()) {
    json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    std::cerr << j.dump() << '\n';
    return code;
}

struct ConfigProblem : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Relative output paths land under $FRINET_OUTPUT_ROOT when it is set.
fs::path output_path(const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path;
    if (const char* root = std::getenv("FRINET_OUTPUT_ROOT"); root && *root) return fs::path(root) / path;
    return path;
}

void write_json(const fs::path& path, const json& j) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw io::FormatError(path.string() + ": " + e.what());
    }
}

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception wins.
template <typename Fn>
void parallel_for(std::size_t n, int jobs, Fn fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Corpus layout: <dir>/corpus.json lists scene ids; each scene lives in
// <dir>/<id>/ with gt.json, cloud.ply and image.raw (+ image.raw.json).

struct CorpusEntry {
    std::string id;
    fs::path dir;
};

std::vector<CorpusEntry> list_corpus(const fs::path& dir) {
    const json manifest = read_json(dir / "corpus.json");
    std::vector<CorpusEntry> out;
    for (const auto& id : manifest.at("scenes")) out.push_back({id.get<std::string>(), dir / id.get<std::string>()});
    if (out.empty()) throw std::runtime_error(dir.string() + ": corpus has no scenes");
    return out;
}

std::vector<pipeline::Scene> load_corpus(const fs::path& dir, bool need_images, bool need_gt) {
    std::vector<pipeline::Scene> scenes;
    for (const auto& e : list_corpus(dir)) {
        pipeline::Scene s;
        s.id = e.id;
        if (fs::exists(e.dir / "gt.json")) {
            s.gt = io::read_floorplan(e.dir / "gt.json");
        } else if (need_gt) {
            throw std::runtime_error("scene " + e.id + " has no gt.json");
        }
        if (need_images) {
            s.image = io::read_raw_image(e.dir / "image.raw");
            if (!fs::exists(e.dir / "gt.json")) s.gt.transform = s.image.transform;
        }
        scenes.push_back(std::move(s));
    }
    return scenes;
}

// ---------------------------------------------------------------------------

struct Common {
    std::uint64_t seed = 0;
    int jobs = 1;
    double gamma = 0.01;
    // Model sizes; unset means "take the preset's value".
    std::optional<std::size_t> m, l, u, q, query_points;
    std::string encoder = "table";
    double corner_tol = 10.0;
    double angle_tol = 5.0;
};

struct SynthArgs {
    std::string output;
    std::size_t count = 4;
    synthgen::SynthSpec spec;
    bool png = false;
};

struct PreprocessArgs {
    std::string input;
    std::string output;
    bool png = false;
    pipeline::PreprocessConfig cfg;
};

struct TrainArgs {
    std::string corpus;
    std::string output;
    std::string preset = "full";
    int epochs = -1;
    int batch = -1;
    double lr = -1.0;
    double code_lr_scale = -1.0;
    double structure_lr_scale = -1.0;
    bool joint = false;
    bool quiet = false;
};

struct InferArgs {
    std::string checkpoint;
    std::string corpus;
    std::string output;
    bool underlay = false;
};

struct EvalArgs {
    std::string pred;
    std::string gt;
    std::string output;
};

struct GradcheckArgs {
    std::size_t configs = 50;
    std::string output;
};

json opt_json(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

json run_config(const std::string& command, const Common& c, json extra) {
    json j = {{"command", command},  {"seed", c.seed},   {"jobs", c.jobs},   {"gamma", c.gamma},
              {"m", opt_json(c.m)},  {"l", opt_json(c.l)}, {"u", opt_json(c.u)}, {"q", opt_json(c.q)},
              {"query_points", opt_json(c.query_points)}, {"encoder", c.encoder},
              {"corner_tol", c.corner_tol},              {"angle_tol", c.angle_tol}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    return j;
}

void validate_common(const Common& c) {
    if (c.jobs < 1) throw ConfigProblem("--jobs must be >= 1");
    if (!(c.gamma > 0.0 && c.gamma < 1.0)) throw ConfigProblem("--gamma must lie in (0, 1)");
    for (const auto& v : {c.m, c.l, c.u, c.q, c.query_points})
        if (v && *v < 1) throw ConfigProblem("sizes must be positive");
    if (c.corner_tol <= 0.0 || c.angle_tol <= 0.0) throw ConfigProblem("metric tolerances must be positive");
    try {
        pipeline::parse_encoder_mode(c.encoder);
    } catch (const std::invalid_argument& e) {
        throw ConfigProblem(e.what());
    }
}

// ---------------------------------------------------------------------------

int cmd_synth(const Common& c, const SynthArgs& a) {
    try {
        a.spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigProblem(e.what());
    }
    if (a.count == 0) throw ConfigProblem("--count must be positive");
    const fs::path out = output_path(a.output);
    std::vector<std::string> ids(a.count);
    std::vector<json> notes(a.count);
    parallel_for(a.count, c.jobs, [&](std::size_t i) {
        ids[i] = pipeline::scene_id(i);
        const auto scene = synthgen::gen_scene(c.seed + i, a.spec);
        const fs::path dir = out / ids[i];
        fs::create_directories(dir);
        io::write_floorplan(dir / "gt.json", scene.floorplan);
        if (a.spec.make_cloud) io::write_ply(dir / "cloud.ply", scene.cloud);
        if (a.spec.make_image) {
            io::write_raw_image(dir / "image.raw", scene.image);
            if (a.png) io::write_png_previews(dir / "image", scene.image);
        }
        notes[i] = {{"id", ids[i]}, {"seed", scene.seed}, {"requested_rooms", scene.requested_rooms},
                    {"rooms", scene.floorplan.rooms.size()}, {"placement_shortfall", scene.placement_shortfall}};
    });
    const auto& s = a.spec;
    write_json(out / "corpus.json",
               {{"scenes", ids},
                {"details", notes},
                {"spec",
                 {{"min_rooms", s.min_rooms}, {"max_rooms", s.max_rooms}, {"manhattan_prob", s.manhattan_prob},
                  {"diagonal_cut_prob", s.diagonal_cut_prob}, {"noise_sigma", s.noise_sigma},
                  {"outlier_fraction", s.outlier_fraction}, {"make_cloud", s.make_cloud}, {"make_image", s.make_image}}},
                {"run_config", run_config("synth", c, {{"count", a.count}})}});
    std::cout << "wrote " << a.count << " scenes to " << out.string() << '\n';
    return 0;
}

int cmd_preprocess(const Common& c, const PreprocessArgs& a) {
    const fs::path in(a.input), out = output_path(a.output);
    auto run_one = [&](const fs::path& cloud_path, const fs::path& raw_path, const fs::path* gt_path) {
        std::optional<geometry::ImageTransform> tf;
        if (gt_path && fs::exists(*gt_path)) tf = io::read_floorplan(*gt_path).transform;
        auto cfg = a.cfg;
        cfg.ransac.seed = c.seed;
        std::vector<preprocess::WallSegment> walls;
        const auto img = pipeline::preprocess_cloud(io::read_cloud(cloud_path), cfg, tf, &walls);
        io::write_raw_image(raw_path, img);
        if (a.png) {
            auto stem = raw_path;
            stem.replace_extension();
            io::write_png_previews(stem, img);
        }
        return walls.size();
    };

    if (fs::is_directory(in)) {
        const auto entries = list_corpus(in);
        std::vector<std::string> ids;
        std::vector<json> notes(entries.size());
        for (const auto& e : entries) ids.push_back(e.id);
        parallel_for(entries.size(), c.jobs, [&](std::size_t i) {
            const auto& e = entries[i];
            const fs::path dir = out / e.id, gt = e.dir / "gt.json";
            fs::create_directories(dir);
            const std::size_t walls = run_one(e.dir / "cloud.ply", dir / "image.raw", &gt);
            if (fs::exists(gt)) fs::copy_file(gt, dir / "gt.json", fs::copy_options::overwrite_existing);
            notes[i] = {{"id", e.id}, {"walls", walls}};
        });
        write_json(out / "corpus.json",
                   {{"scenes", ids}, {"details", notes}, {"run_config", run_config("preprocess", c, {{"input", a.input}})}});
        std::cout << "preprocessed " << entries.size() << " scenes into " << out.string() << '\n';
    } else {
        fs::path raw = out;
        if (raw.extension() != ".raw") raw = out / (in.stem().string() + ".raw");
        const std::size_t walls = run_one(in, raw, nullptr);
        std::cout << "wrote " << raw.string() << " (" << walls << " wall planes)\n";
    }
    return 0;
}

training::TrainConfig train_config(const Common& c, const TrainArgs& a) {
    training::TrainConfig cfg;
    if (a.preset == "full") {
        cfg = training::TrainConfig::full_scale();
    } else if (a.preset == "desk") {
        cfg = training::TrainConfig::desk_scale();
    } else {
        throw ConfigProblem("unknown preset '" + a.preset + "' (expected full or desk)");
    }
    cfg.decoder.q = c.q.value_or(cfg.decoder.q);
    cfg.decoder.l = c.l.value_or(cfg.decoder.l);
    cfg.decoder.u = c.u.value_or(cfg.decoder.u);
    cfg.m = c.m.value_or(cfg.m);
    cfg.query_points = c.query_points.value_or(cfg.query_points);
    cfg.gamma = c.gamma;
    cfg.seed = c.seed;
    cfg.jobs = c.jobs;
    cfg.staged = !a.joint;
    if (a.code_lr_scale > 0) cfg.code_lr_scale = a.code_lr_scale;
    for (auto& st : cfg.stages) {
        if (a.epochs > 0) st.epochs = a.epochs;
        if (a.batch > 0) st.batch = std::size_t(a.batch);
        if (a.lr > 0) st.lr = a.lr;
    }
    if (a.structure_lr_scale > 0) cfg.stages[2].structure_lr_scale = a.structure_lr_scale;
    return cfg;
}

int cmd_train(const Common& c, const TrainArgs& a) {
    const auto cfg = train_config(c, a);
    const auto mode = pipeline::parse_encoder_mode(c.encoder);
    const fs::path out = output_path(a.output);
    const auto scenes = load_corpus(a.corpus, mode == pipeline::EncoderMode::tiny, true);

    auto model = pipeline::init_model(cfg, mode, scenes);
    auto trainer = pipeline::make_trainer(model, scenes);
    fs::create_directories(out);
    trainer.set_output_dir(out);
    const json meta = pipeline::model_meta(model);
    write_json(out / "run_config.json", run_config("train", c, {{"corpus", a.corpus}, {"preset", a.preset}, {"model", meta}}));

    if (!a.quiet) {
        trainer.set_progress([&, last = -1](const training::StepLog& l) mutable {
            const int key = l.stage * 100000 + l.epoch;
            if (key == last) return;
            last = key;
            std::cerr << "stage " << l.stage << " epoch " << l.epoch << " loss " << l.terms.total() << '\n';
        });
    }
    try {
        for (const auto& st : cfg.stages) {
            trainer.run_stage(st);
            // Re-save with the model description so `infer` can rebuild the decoder.
            json m = meta;
            m["stage"] = st.id;
            io::save_checkpoint(trainer.last_checkpoint(), model.params, m);
        }
    } catch (const training::NonFiniteLoss& e) {
        return fail(kExitNonFinite, "non_finite_loss", e.what(), {{"checkpoint", e.checkpoint()}});
    }
    std::cout << "checkpoint " << trainer.last_checkpoint() << '\n';
    return 0;
}

pipeline::Model load_model(const std::string& checkpoint) {
    json meta;
    auto params = io::load_checkpoint<float>(checkpoint, &meta);
    if (!meta.contains("decoder")) throw io::FormatError(checkpoint + ": checkpoint carries no model description");
    return pipeline::model_from_meta(meta, std::move(params));
}

int cmd_infer(const Common& c, const InferArgs& a) {
    const auto model = load_model(a.checkpoint);
    const auto scenes = load_corpus(a.corpus, model.mode == pipeline::EncoderMode::tiny, false);
    const fs::path out = output_path(a.output);
    fs::create_directories(out);
    vectorize::ExtractConfig ecfg;
    ecfg.gamma = c.gamma;
    const auto params = model.params.cast<double>();
    parallel_for(scenes.size(), c.jobs, [&](std::size_t i) {
        const auto& s = scenes[i];
        const auto fp = vectorize::extract_floorplan(params, pipeline::scene_codes(model, params, s), model.cfg.decoder, ecfg,
                                                     s.gt.transform);
        io::write_floorplan(out / (s.id + ".json"), fp);
        std::string underlay;
        if (a.underlay && fs::exists(fs::path(a.corpus) / s.id / "image_density.png"))
            underlay = fs::absolute(fs::path(a.corpus) / s.id / "image_density.png").string();
        io::write_svg(out / (s.id + ".svg"), fp, underlay);
    });
    json ids = json::array();
    for (const auto& s : scenes) ids.push_back(s.id);
    write_json(out / "corpus.json",
               {{"scenes", ids}, {"run_config", run_config("infer", c, {{"checkpoint", a.checkpoint}, {"corpus", a.corpus}})}});
    std::cout << "wrote " << scenes.size() << " floorplans to " << out.string() << '\n';
    return 0;
}

int cmd_eval(const Common& c, const EvalArgs& a) {
    metrics::EvalConfig ecfg;
    ecfg.corner_tol_px = c.corner_tol;
    ecfg.angle_tol_deg = c.angle_tol;
    const auto entries = list_corpus(a.gt);
    std::vector<metrics::EvalReport> reports(entries.size());
    std::vector<std::size_t> gt_rooms(entries.size());
    parallel_for(entries.size(), c.jobs, [&](std::size_t i) {
        const auto gt = io::read_floorplan(entries[i].dir / "gt.json");
        const auto pred = io::read_floorplan(fs::path(a.pred) / (entries[i].id + ".json"));
        reports[i] = metrics::evaluate(pred, gt, ecfg);
        gt_rooms[i] = gt.rooms.size();
    });
    const auto total = metrics::aggregate(reports, gt_rooms);

    json per = json::object();
    for (std::size_t i = 0; i < entries.size(); ++i) per[entries[i].id] = pipeline::report_json(reports[i]);
    const fs::path out = output_path(a.output);
    write_json(out / "report.json", {{"aggregate", pipeline::report_json(total)},
                                     {"scenes", per},
                                     {"run_config", run_config("eval", c, {{"pred", a.pred}, {"gt", a.gt}})}});
    std::ofstream csv(out / "report.csv");
    csv << "scene,room_p,room_r,room_f1,corner_p,corner_r,corner_f1,angle_p,angle_r,angle_f1,mean_iou\n";
    csv << std::setprecision(8);
    auto row = [&](const std::string& name, const metrics::EvalReport& r) {
        csv << name << ',' << r.room.precision << ',' << r.room.recall << ',' << r.room.f1 << ',' << r.corner.precision << ','
            << r.corner.recall << ',' << r.corner.f1 << ',' << r.angle.precision << ',' << r.angle.recall << ',' << r.angle.f1
            << ',' << r.mean_iou << '\n';
    };
    for (std::size_t i = 0; i < entries.size(); ++i) row(entries[i].id, reports[i]);
    row("ALL", total);

    std::cout << std::fixed << std::setprecision(4) << "room P/R/F1 " << total.room.precision << ' ' << total.room.recall
              << ' ' << total.room.f1 << "\ncorner P/R/F1 " << total.corner.precision << ' ' << total.corner.recall << ' '
              << total.corner.f1 << "\nangle P/R/F1 " << total.angle.precision << ' ' << total.angle.recall << ' '
              << total.angle.f1 << "\nmean IoU " << total.mean_iou << '\n';
    return 0;
}

int cmd_gradcheck(const Common& c, const GradcheckArgs& a) {
    const auto summary = training::run_gradcheck(a.configs, c.seed);
    std::ostream* os = &std::cout;
    std::ofstream file;
    if (!a.output.empty()) {
        const fs::path p = output_path(a.output);
        if (p.has_parent_path()) fs::create_directories(p.parent_path());
        file.open(p);
        if (!file) throw std::runtime_error("cannot write " + p.string());
        os = &file;
    }
    *os << "seed,form,group,checked,skipped,analytic_norm,fd_norm,rel_error,pass\n" << std::setprecision(6);
    for (const auto& r : summary.rows) {
        *os << r.seed << ',' << r.form << ',' << r.group << ',' << r.checked << ',' << r.skipped << ',' << r.analytic_norm
            << ',' << r.fd_norm << ',' << r.rel_error << ',' << (r.pass ? "PASS" : "FAIL") << '\n';
    }
    std::cout << "gradcheck: " << summary.rows.size() << " comparisons over " << summary.configs
              << " configurations, worst rel. err " << summary.worst_rel_error << ", " << summary.seconds << " s -> "
              << (summary.pass ? "PASS" : "FAIL") << '\n';
    return summary.pass ? 0 : kExitError;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Room-wise implicit floorplan reconstruction"};
    app.set_config("--config", "", "key=value config file; flags override it");
    app.require_subcommand(1);
    app.fallthrough();

    Common c;
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--jobs", c.jobs, "worker threads");
    app.add_option("--gamma", c.gamma, "selection threshold at inference");
    app.add_option("--m", c.m, "room slots per scene (preset default 20)");
    app.add_option("--l", c.l, "lines per line kind");
    app.add_option("--u", c.u, "convex primitives");
    app.add_option("--q", c.q, "room code width");
    app.add_option("--query-points", c.query_points, "query points per scene and step");
    app.add_option("--encoder", c.encoder, "tiny or table")->check(CLI::IsMember({"tiny", "table"}));
    app.add_option("--corner-tol", c.corner_tol, "corner match tolerance in pixels");
    app.add_option("--angle-tol", c.angle_tol, "angle match tolerance in degrees");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "generate a synthetic scene corpus");
    synth->add_option("--output,-o", sa.output, "corpus directory")->required();
    synth->add_option("--count", sa.count, "number of scenes");
    synth->add_option("--min-rooms", sa.spec.min_rooms);
    synth->add_option("--max-rooms", sa.spec.max_rooms);
    synth->add_option("--manhattan-prob", sa.spec.manhattan_prob, "probability that a scene has no corner cuts");
    synth->add_option("--diagonal-cut-prob", sa.spec.diagonal_cut_prob, "per-room probability of a 45 degree cut");
    synth->add_option("--noise", sa.spec.noise_sigma, "point noise sigma in meters");
    synth->add_option("--outliers", sa.spec.outlier_fraction, "outlier fraction");
    synth->add_flag("!--no-cloud", sa.spec.make_cloud, "skip point clouds");
    synth->add_flag("--png", sa.png, "write PNG previews");

    PreprocessArgs pa;
    auto* prep = app.add_subcommand("preprocess", "point clouds to density/height images");
    prep->add_option("--input,-i", pa.input, "cloud file (.ply/.xyz) or corpus directory")->required()->check(CLI::ExistingPath);
    prep->add_option("--output,-o", pa.output, "output directory or .raw file")->required();
    prep->add_flag("--png", pa.png, "write PNG previews");
    prep->add_option("--knn", pa.cfg.segmentation.k);
    prep->add_option("--angle-thresh", pa.cfg.segmentation.angle_thresh_deg);
    prep->add_option("--dist-thresh", pa.cfg.segmentation.dist_thresh);
    prep->add_option("--min-region", pa.cfg.segmentation.min_region_size);
    prep->add_option("--ransac-iters", pa.cfg.ransac.iterations);
    prep->add_option("--ransac-thresh", pa.cfg.ransac.inlier_thresh);

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "three-stage training");
    train->add_option("--corpus", ta.corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
    train->add_option("--output,-o", ta.output, "run directory")->required();
    train->add_option("--preset", ta.preset, "full or desk schedule")->check(CLI::IsMember({"full", "desk"}));
    train->add_option("--epochs", ta.epochs, "epochs per stage");
    train->add_option("--batch", ta.batch, "scenes per step");
    train->add_option("--lr", ta.lr, "base learning rate");
    train->add_option("--code-lr-scale", ta.code_lr_scale, "learning-rate multiplier for latent codes");
    train->add_option("--structure-lr-scale", ta.structure_lr_scale, "stage 3 learning-rate multiplier for T and W");
    train->add_flag("--joint", ta.joint, "train all line kinds from the first stage");
    train->add_flag("--quiet", ta.quiet);

    InferArgs ia;
    auto* infer = app.add_subcommand("infer", "floorplans from a checkpoint");
    infer->add_option("--checkpoint", ia.checkpoint, "checkpoint base path (without .json)")->required();
    infer->add_option("--corpus", ia.corpus, "corpus directory")->required()->check(CLI::ExistingDirectory);
    infer->add_option("--output,-o", ia.output, "output directory")->required();
    infer->add_flag("--underlay", ia.underlay, "reference the density preview in the SVG");

    EvalArgs ea;
    auto* eval = app.add_subcommand("eval", "room/corner/angle metrics");
    eval->add_option("--pred", ea.pred, "directory of predicted floorplans")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--gt", ea.gt, "ground-truth corpus directory")->required()->check(CLI::ExistingDirectory);
    eval->add_option("--output,-o", ea.output, "report directory")->required();

    GradcheckArgs ga;
    auto* grad = app.add_subcommand("gradcheck", "finite-difference gradient suite");
    grad->add_option("--configs", ga.configs, "random configurations");
    grad->add_option("--output,-o", ga.output, "CSV table path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kExitConfig, "config", e.what());
    }

    try {
        validate_common(c);
        if (*synth) return cmd_synth(c, sa);
        if (*prep) return cmd_preprocess(c, pa);
        if (*train) return cmd_train(c, ta);
        if (*infer) return cmd_infer(c, ia);
        if (*eval) return cmd_eval(c, ea);
        if (*grad) return cmd_gradcheck(c, ga);
    } catch (const ConfigProblem& e) {
        return fail(kExitConfig, "config", e.what());
    } catch (const std::exception& e) {
        return fail(kExitError, "runtime", e.what());
    }
    return kExitError;
}
