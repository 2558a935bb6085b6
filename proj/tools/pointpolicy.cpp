// Command-line entry points: demo generation, retargeting, training, evaluation, the depth
// ablation, the pose roundtrip check and SVG plots.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pointpolicy/control/backtrack.hpp"
#include "pointpolicy/control/rollout.hpp"
#include "pointpolicy/dataio/config.hpp"
#include "pointpolicy/dataio/dataset.hpp"
#include "pointpolicy/dataio/demonstration.hpp"
#include "pointpolicy/errors.hpp"
#include "pointpolicy/policy/checkpoint.hpp"
#include "pointpolicy/policy/policy.hpp"
#include "pointpolicy/policy/train.hpp"
#include "pointpolicy/retarget/keypoints.hpp"
#include "pointpolicy/retarget/retarget.hpp"
#include "pointpolicy/simenv/evaluate.hpp"
#include "pointpolicy/simenv/expert.hpp"
#include "pointpolicy/util/hash.hpp"
#include "pointpolicy/util/seed.hpp"

namespace fs = std::filesystem;
using namespace pointpolicy;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kRuntime = 3 };

/// Errors caused by bad inputs (files, configs, specs) rather than by the computation.
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what) {}
};

struct Options {
    std::string config;
    std::uint64_t seed = 0;
    std::string out;
    int trials = 10;
    std::string lifting = "triangulated";
    double noise_px = 0.5;
    double depth_bias = 0.0;
    double depth_jitter = 0.0;
    std::string task;
    std::string data;
    std::string checkpoint;
    std::string cameras;
    int count = 0;
    int steps = -1;
    bool expert = false;
    std::vector<std::string> inputs;
};

std::string num(double v) {
    std::ostringstream s;
    s << std::setprecision(17) << v;
    return s.str();
}

fs::path require_dir(const std::string& p, const char* what) {
    if (p.empty()) throw DataError(std::string("missing ") + what);
    const fs::path dir = dataio::resolve_data_path(p);
    if (!fs::is_directory(dir)) throw DataError(std::string(what) + " '" + dir.string() + "' is not a directory");
    return dir;
}

fs::path output_dir(const Options& o) {
    const fs::path dir = o.out.empty() ? fs::path(".") : fs::path(o.out);
    fs::create_directories(dir);
    return dir;
}

simenv::TaskSpec task_spec(const Options& o, const std::string& fallback = "") {
    if (!o.config.empty()) {
        nlohmann::json j = dataio::load_json(dataio::resolve_data_path(o.config));
        if (!o.task.empty()) j["task"] = o.task;
        return dataio::task_from_json(j);
    }
    const std::string name = o.task.empty() ? fallback : o.task;
    if (name.empty()) throw DataError("no task given (use --task or --config)");
    return simenv::TaskSpec::for_kind(simenv::task_kind_from_string(name));
}

std::vector<geometry::CameraModel> camera_rig(const std::string& path) {
    if (path.empty()) return simenv::default_cameras();
    return dataio::cameras_from_json(dataio::load_json(dataio::resolve_data_path(path)));
}

simenv::NoiseModel noise_model(const Options& o) {
    simenv::NoiseModel n;
    n.pixel_sigma = o.noise_px;
    n.depth_bias = o.depth_bias;
    n.depth_jitter = o.depth_jitter;
    n.validate();
    return n;
}

/// Demo files of a directory in name order.
std::vector<fs::path> demo_files(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".jsonl") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

bool is_data_error(const std::exception& e) {
    return dynamic_cast<const DataError*>(&e) || dynamic_cast<const CorruptFile*>(&e) ||
           dynamic_cast<const SchemaViolation*>(&e) || dynamic_cast<const FormatVersionMismatch*>(&e) ||
           dynamic_cast<const SchemaMismatchAcrossDemos*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
           dynamic_cast<const InvalidSpec*>(&e) || dynamic_cast<const EmptyDataset*>(&e) ||
           dynamic_cast<const std::filesystem::filesystem_error*>(&e);
}

bool is_human_demo(const dataio::Demonstration& d) {
    return !d.header.indices_with_role(dataio::KeypointRole::Hand).empty();
}

// --- CSV ------------------------------------------------------------------------------------------

const char* kResultsHeader = "task,lifting,seed,trial,scene_seed,noise_seed,success,final_error,steps,clamp_events";

void write_results(std::ostream& out, const std::string& task, simenv::LiftingMode mode, std::uint64_t seed,
                   const simenv::EvaluationResult& r) {
    for (const auto& t : r.trials) {
        out << task << ',' << simenv::to_string(mode) << ',' << seed << ',' << t.trial << ',' << t.scene_seed << ','
            << t.noise_seed << ',' << (t.success ? 1 : 0) << ',' << num(t.final_error) << ',' << t.steps << ','
            << t.clamp_events << '\n';
    }
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        const auto it = std::find(header.begin(), header.end(), name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    }
};

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

Csv read_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    Csv csv;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto cells = split(line);
        if (csv.header.empty()) {
            csv.header = std::move(cells);
        } else {
            if (cells.size() != csv.header.size()) throw DataError(path.string() + ": ragged row '" + line + "'");
            csv.rows.push_back(std::move(cells));
        }
    }
    if (csv.header.empty() || csv.rows.empty()) throw DataError(path.string() + ": no data rows");
    return csv;
}

double parse_number(const std::string& s, const std::string& where) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) throw DataError(where + ": '" + s + "' is not a number");
    return v;
}

// --- SVG ------------------------------------------------------------------------------------------

const std::vector<std::string> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string svg_open(double w, double h) {
    std::ostringstream s;
    s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\" viewBox=\"0 0 " << w
      << ' ' << h << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    return s.str();
}

/// One polyline per numeric column after the first (the x axis); log-scaled y when all values are positive.
std::string loss_svg(const Csv& csv, const std::string& name) {
    const double W = 640, H = 400, L = 60, R = 150, T = 30, B = 40;
    std::vector<double> x;
    std::vector<std::vector<double>> ys(csv.header.size() - 1);
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const std::string where = name + " row " + std::to_string(r + 1);
        x.push_back(parse_number(csv.rows[r][0], where));
        for (std::size_t c = 1; c < csv.header.size(); ++c) ys[c - 1].push_back(parse_number(csv.rows[r][c], where));
    }
    double ymin = INFINITY, ymax = -INFINITY;
    for (const auto& y : ys) {
        for (double v : y) {
            if (std::isfinite(v)) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
        }
    }
    if (!std::isfinite(ymin)) throw DataError(name + ": no finite values to plot");
    const bool logy = ymin > 0.0;
    auto ty = [&](double v) { return logy ? std::log10(v) : v; };
    double lo = ty(ymin), hi = ty(ymax);
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double xmin = *std::min_element(x.begin(), x.end());
    double xmax = *std::max_element(x.begin(), x.end());
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    auto px = [&](double v) { return L + (v - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double v) { return H - B - (ty(v) - lo) / (hi - lo) * (H - T - B); };

    std::ostringstream s;
    s << svg_open(W, H);
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 8 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << csv.header[0] << "</text>\n";
    s << "<text x=\"" << L - 5 << "\" y=\"" << T << "\" text-anchor=\"end\" font-size=\"10\">" << num(ymax) << "</text>\n";
    s << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"10\">" << num(ymin) << "</text>\n";
    for (std::size_t c = 0; c < ys.size(); ++c) {
        const std::string& color = kPalette[c % kPalette.size()];
        s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(ys[c][i]) || (logy && ys[c][i] <= 0.0)) continue;
            s << (first ? "" : " ") << px(x[i]) << ',' << py(ys[c][i]);
            first = false;
        }
        s << "\"/>\n";
        s << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 15 * (c + 1) << "\" fill=\"" << color
          << "\" font-size=\"12\">" << csv.header[c + 1] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

/// Success-rate bars per (task, lifting) group of a results CSV.
std::string results_svg(const Csv& csv, const std::string& name) {
    const int succ = csv.column("success");
    const int task = csv.column("task");
    const int lift = csv.column("lifting");
    std::map<std::string, std::pair<int, int>> groups;  // label -> (successes, trials)
    std::vector<std::string> order;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const double v = parse_number(csv.rows[r][static_cast<std::size_t>(succ)], name + " row " + std::to_string(r + 1));
        if (v != 0.0 && v != 1.0) throw DataError(name + ": success must be 0 or 1");
        std::string label = task >= 0 ? csv.rows[r][static_cast<std::size_t>(task)] : "all";
        if (lift >= 0) label += " / " + csv.rows[r][static_cast<std::size_t>(lift)];
        if (!groups.count(label)) order.push_back(label);
        groups[label].first += static_cast<int>(v);
        groups[label].second += 1;
    }
    const double bar = 60, gap = 40, L = 50, T = 30, B = 60, H = 360;
    const double W = L + order.size() * (bar + gap) + gap;
    std::ostringstream s;
    s << svg_open(W, H);
    s << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - 10 << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << L - 5 << "\" y=\"" << T << "\" text-anchor=\"end\" font-size=\"10\">1.0</text>\n";
    for (std::size_t i = 0; i < order.size(); ++i) {
        const auto [k, n] = groups[order[i]];
        const double rate = static_cast<double>(k) / n;
        const double x = L + gap + i * (bar + gap);
        const double h = rate * (H - T - B);
        s << "<rect x=\"" << x << "\" y=\"" << H - B - h << "\" width=\"" << bar << "\" height=\"" << h << "\" fill=\""
          << kPalette[i % kPalette.size()] << "\"/>\n";
        s << "<text x=\"" << x + bar / 2 << "\" y=\"" << H - B - h - 5 << "\" text-anchor=\"middle\" font-size=\"12\">" << k
          << '/' << n << "</text>\n";
        s << "<text x=\"" << x + bar / 2 << "\" y=\"" << H - B + 15 << "\" text-anchor=\"middle\" font-size=\"10\">"
          << order[i] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

// --- subcommands ------------------------------------------------------------------------------------

int cmd_gen_demos(const Options& o) {
    const simenv::TaskSpec spec = task_spec(o);
    const auto cams = camera_rig(o.cameras);
    const simenv::NoiseModel noise = noise_model(o);
    if (o.count < 0) throw DataError("-n must be >= 0");
    const fs::path out = output_dir(o);
    std::cout << "gen-demos task=" << spec.id() << " n=" << o.count << " seed=" << o.seed << '\n';
    std::ofstream(out / "cameras.json") << dataio::cameras_to_json(cams).dump(2) << '\n';
    int written = 0, failed = 0;
    for (int i = 0; i < o.count; ++i) {
        const auto ui = static_cast<std::uint64_t>(i);
        const simenv::Scene scene = simenv::reset(spec, util::derive_seed(o.seed, util::kDemoSceneStream, ui));
        std::mt19937_64 rng(util::derive_seed(o.seed, util::kDemoNoiseStream, ui));
        try {
            const auto e = simenv::scripted_expert(scene, cams, noise, rng);
            std::ostringstream name;
            name << "demo_" << std::setw(3) << std::setfill('0') << i << ".jsonl";
            dataio::write_demo((out / name.str()).string(), e.demo);
            ++written;
        } catch (const PlanningFailed& e) {
            ++failed;
            std::cerr << "demo " << i << ": " << e.what() << '\n';
        }
    }
    std::cout << "wrote " << written << " demos, planning failed for " << failed << '\n';
    return (o.count > 0 && written == 0) ? kRuntime : kOk;
}

std::vector<dataio::Demonstration> load_robot_demos(const fs::path& dir, const std::string& cameras) {
    const auto files = demo_files(dir);
    if (files.empty()) throw EmptyDataset("no .jsonl demos in " + dir.string());
    std::optional<std::vector<geometry::CameraModel>> cams;
    std::vector<dataio::Demonstration> demos;
    for (const auto& f : files) {
        dataio::Demonstration d = dataio::read_demo(f.string());
        if (is_human_demo(d)) {
            if (!cams) cams = camera_rig(cameras.empty() ? (dir / "cameras.json").string() : cameras);
            d = retarget::retarget_demo(d, *cams, retarget::OffsetTable::default_table());
        }
        demos.push_back(std::move(d));
    }
    return demos;
}

int cmd_retarget(const Options& o) {
    const fs::path in = require_dir(o.data, "--data");
    const auto files = demo_files(in);
    const auto cams = camera_rig(o.cameras.empty() ? (in / "cameras.json").string() : o.cameras);
    const fs::path out = output_dir(o);
    int n = 0;
    for (const auto& f : files) {
        const dataio::Demonstration human = dataio::read_demo(f.string());
        const auto robot = retarget::retarget_demo(human, cams, retarget::OffsetTable::default_table());
        dataio::write_demo((out / f.filename()).string(), robot);
        ++n;
    }
    std::cout << "retargeted " << n << " demos\n";
    return kOk;
}

int cmd_train(const Options& o) {
    dataio::TrainingSetup setup;
    if (!o.config.empty()) setup = dataio::training_from_json(dataio::load_json(dataio::resolve_data_path(o.config)));
    setup.train.seed = o.seed;
    if (o.steps >= 0) setup.train.steps = o.steps;
    const fs::path data = require_dir(o.data, "--data");
    std::vector<dataio::Demonstration> demos;
    for (auto& d : load_robot_demos(data, o.cameras)) demos.push_back(dataio::subsample(d, setup.stride));
    const auto ds = dataio::build_dataset(std::move(demos), setup.dataset);
    const fs::path out = output_dir(o);
    std::cout << "train seed=" << o.seed << " steps=" << setup.train.steps << " demos=" << ds.demos.size()
              << " samples=" << ds.train_samples.size() << " val=" << ds.val_samples.size() << '\n';

    std::ofstream loss(out / "loss.csv");
    loss << "step,loss,track,gripper,val_loss\n";
    const auto progress = [&](const policy::LossRecord& r) {
        loss << r.step << ',' << num(r.loss) << ',' << num(r.track) << ',' << num(r.gripper) << ',' << num(r.val_loss) << '\n';
        loss.flush();
        std::cout << "step " << r.step << " loss " << r.loss << " val " << r.val_loss << std::endl;
    };
    const auto checkpoint = [&](int step, const policy::PolicyParameters& p) {
        policy::save_checkpoint((out / ("policy_step" + std::to_string(step) + ".ckpt")).string(), p);
    };
    const auto result = policy::train(ds, setup.policy, setup.train, checkpoint, progress);
    const fs::path ckpt = out / "policy.ckpt";
    policy::save_checkpoint(ckpt.string(), result.params);
    std::cout << "checkpoint " << ckpt.string() << " sha256 " << util::sha256_file(ckpt.string()) << '\n';
    return kOk;
}

simenv::EvaluationResult run_eval(control::Controller& c, const simenv::TaskSpec& spec,
                                  const std::vector<geometry::CameraModel>& cams, const Options& o,
                                  simenv::LiftingMode mode, const simenv::NoiseModel& noise) {
    simenv::EvaluationConfig cfg;
    cfg.trials = o.trials;
    cfg.seed = o.seed;
    cfg.lifting = mode;
    cfg.noise = noise;
    return simenv::evaluate(c, spec, cams, cfg);
}

std::unique_ptr<control::Controller> make_controller(const Options& o, std::optional<policy::Policy>& holder,
                                                     std::string& task) {
    if (o.expert) return std::make_unique<simenv::ExpertController>();
    if (o.checkpoint.empty()) throw DataError("missing --checkpoint (or --expert)");
    holder.emplace(policy::load_checkpoint(dataio::resolve_data_path(o.checkpoint).string()));
    task = holder->parameters().task;
    return std::make_unique<control::LearnedController>(*holder);
}

int cmd_eval(const Options& o) {
    std::optional<policy::Policy> pol;
    std::string trained_task;
    auto controller = make_controller(o, pol, trained_task);
    const simenv::TaskSpec spec = task_spec(o, trained_task);
    if (!trained_task.empty() && trained_task != spec.id()) {
        throw DataError("checkpoint was trained on '" + trained_task + "', not '" + spec.id() + "'");
    }
    const auto cams = camera_rig(o.cameras);
    const auto mode = simenv::lifting_mode_from_string(o.lifting);
    const auto r = run_eval(*controller, spec, cams, o, mode, noise_model(o));
    const fs::path out = output_dir(o);
    std::ofstream csv(out / "results.csv");
    csv << kResultsHeader << '\n';
    write_results(csv, spec.id(), mode, o.seed, r);
    std::cout << "eval task=" << spec.id() << " lifting=" << simenv::to_string(mode) << " seed=" << o.seed << '\n';
    std::cout << spec.id() << ": " << r.successes() << '/' << r.trials.size() << '\n';
    return kOk;
}

int cmd_ablate_depth(const Options& o) {
    std::optional<policy::Policy> pol;
    std::string trained_task;
    auto controller = make_controller(o, pol, trained_task);
    const simenv::TaskSpec spec = task_spec(o, trained_task);
    const auto cams = camera_rig(o.cameras);
    const simenv::NoiseModel noise = noise_model(o);
    const auto tri = run_eval(*controller, spec, cams, o, simenv::LiftingMode::Triangulated, noise);
    const auto sen = run_eval(*controller, spec, cams, o, simenv::LiftingMode::SensorDepth, noise);
    const fs::path out = output_dir(o);
    std::ofstream csv(out / "ablation.csv");
    csv << kResultsHeader << '\n';
    write_results(csv, spec.id(), simenv::LiftingMode::Triangulated, o.seed, tri);
    write_results(csv, spec.id(), simenv::LiftingMode::SensorDepth, o.seed, sen);
    std::cout << "ablate-depth task=" << spec.id() << " seed=" << o.seed << " depth_bias=" << o.depth_bias
              << " depth_jitter=" << o.depth_jitter << '\n';
    std::cout << "triangulated: " << tri.successes() << '/' << tri.trials.size() << '\n';
    std::cout << "sensor: " << sen.successes() << '/' << sen.trials.size() << '\n';
    const char* verdict = tri.successes() > sen.successes()    ? "triangulated > sensor"
                          : tri.successes() == sen.successes() ? "triangulated = sensor"
                                                               : "triangulated < sensor";
    std::cout << "verdict: " << verdict << '\n';
    return kOk;
}

int cmd_roundtrip(const Options& o) {
    if (o.count < 0) throw DataError("-n must be >= 0");
    const auto offsets = retarget::OffsetTable::default_table();
    const geometry::Quaternion base = simenv::gripper_down();
    const control::Workspace ws;
    std::mt19937_64 rng(o.seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    double max_pos = 0.0, max_rot = 0.0;
    for (int i = 0; i < o.count; ++i) {
        Eigen::Vector3d p;
        for (int a = 0; a < 3; ++a) p(a) = ws.lower(a) + u(rng) * (ws.upper(a) - ws.lower(a));
        const geometry::Quaternion q = geometry::Quaternion(g(rng), g(rng), g(rng), g(rng)).normalized();
        const geometry::Pose pose(p, q);
        const geometry::Pose back = control::backtrack_pose(retarget::pose_to_keypoints(pose, offsets), offsets, base);
        max_pos = std::max(max_pos, (back.position() - pose.position()).norm());
        max_rot = std::max(max_rot, geometry::angular_distance(back.orientation(), pose.orientation()));
    }
    const bool ok = max_pos <= 1e-6 && max_rot <= 1e-6;
    std::cout << "roundtrip-check n=" << o.count << " seed=" << o.seed << '\n';
    std::cout << "max position error " << num(max_pos) << " m, max rotation error " << num(max_rot) << " rad\n";
    std::cout << (ok ? "PASS" : "FAIL") << '\n';
    return ok ? kOk : kRuntime;
}

int cmd_plot(const Options& o) {
    if (o.inputs.empty()) throw DataError("no CSV given");
    const fs::path in = dataio::resolve_data_path(o.inputs.front());
    const Csv csv = read_csv(in);
    const std::string svg = csv.column("success") >= 0 ? results_svg(csv, in.string())
                            : csv.header.size() >= 2  ? loss_svg(csv, in.string())
                                                      : throw DataError(in.string() + ": nothing to plot");
    fs::path out = o.out.empty() ? fs::path(in).replace_extension(".svg") : fs::path(o.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream(out) << svg;
    std::cout << "wrote " << out.string() << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point-track imitation learning pipeline"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::string> modes{"triangulated", "sensor"};

    auto common = [&](CLI::App* c) {
        c->add_option("--config", o.config, "JSON config (task spec for gen-demos/eval, training setup for train)");
        c->add_option("--seed", o.seed, "Base seed (default 0)");
        c->add_option("--out", o.out, "Output directory (plot: output SVG path)");
    };
    auto sensing = [&](CLI::App* c) {
        c->add_option("--noise-px", o.noise_px, "Pixel noise sigma")->check(CLI::NonNegativeNumber);
        c->add_option("--cameras", o.cameras, "Camera rig JSON (default: built-in two-camera rig)");
    };
    auto evaluation = [&](CLI::App* c) {
        c->add_option("--checkpoint", o.checkpoint, "Trained policy checkpoint");
        c->add_flag("--expert", o.expert, "Evaluate the scripted expert instead of a checkpoint");
        c->add_option("--task", o.task, "reach | push-block | pick-place (default: the checkpoint's task)");
        c->add_option("--trials", o.trials, "Number of trials")->check(CLI::NonNegativeNumber);
        c->add_option("--depth-bias", o.depth_bias, "Sensor depth bias (m)")->check(CLI::NonNegativeNumber);
        c->add_option("--depth-jitter", o.depth_jitter, "Sensor depth jitter sigma (m)")->check(CLI::NonNegativeNumber);
    };

    auto* gen = app.add_subcommand("gen-demos", "Write scripted two-view demonstrations");
    common(gen);
    sensing(gen);
    gen->add_option("--task", o.task, "reach | push-block | pick-place");
    gen->add_option("-n", o.count, "Number of demos")->required();

    auto* ret = app.add_subcommand("retarget", "Convert hand demonstrations to robot-point demonstrations");
    common(ret);
    ret->add_option("--data", o.data, "Directory of hand demos (with cameras.json)")->required();
    ret->add_option("--cameras", o.cameras, "Camera rig JSON (default: <data>/cameras.json)");

    auto* tr = app.add_subcommand("train", "Train a policy on a demo directory");
    common(tr);
    tr->add_option("--data", o.data, "Directory of demos (hand demos are retargeted on load)")->required();
    tr->add_option("--cameras", o.cameras, "Camera rig JSON for hand demos (default: <data>/cameras.json)");
    tr->add_option("--steps", o.steps, "Override the number of optimizer steps");

    auto* ev = app.add_subcommand("eval", "Evaluate a policy in simulation");
    common(ev);
    sensing(ev);
    evaluation(ev);
    ev->add_option("--lifting", o.lifting, "Point lifting mode")->check(CLI::IsMember(modes));

    auto* ab = app.add_subcommand("ablate-depth", "Compare triangulated and sensor-depth lifting");
    common(ab);
    sensing(ab);
    evaluation(ab);

    auto* rt = app.add_subcommand("roundtrip-check", "Pose -> robot points -> pose on random poses");
    common(rt);
    rt->add_option("-n", o.count, "Number of poses (default 1000)");

    auto* pl = app.add_subcommand("plot", "Render a loss or results CSV as SVG");
    common(pl);
    pl->add_option("csv", o.inputs, "Input CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    if (rt->parsed() && rt->count("-n") == 0) o.count = 1000;
    if (ab->parsed()) {
        if (ab->count("--depth-bias") == 0) o.depth_bias = 0.02;
        if (ab->count("--depth-jitter") == 0) o.depth_jitter = 0.01;
        if (ab->count("--trials") == 0) o.trials = 20;
    }

    try {
        if (gen->parsed()) return cmd_gen_demos(o);
        if (ret->parsed()) return cmd_retarget(o);
        if (tr->parsed()) return cmd_train(o);
        if (ev->parsed()) return cmd_eval(o);
        if (ab->parsed()) return cmd_ablate_depth(o);
        if (rt->parsed()) return cmd_roundtrip(o);
        if (pl->parsed()) return cmd_plot(o);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return is_data_error(e) ? kData : kRuntime;
    }
    return kUsage;
}
