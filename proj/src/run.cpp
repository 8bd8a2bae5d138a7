#include "stss/run.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "stss/grid.hpp"
#include "stss/image_io.hpp"
#include "stss/validation.hpp"

namespace stss::cli {

namespace {

namespace fs = std::filesystem;

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const char* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, v);
    if (ec != std::errc() || ptr != end) throw ConfigError("bad value for " + key + ": '" + text + "'");
    return v;
}

const char* mode_name(Mode m) {
    switch (m) {
        case Mode::intensity: return "intensity";
        case Mode::motion: return "motion";
        case Mode::validate: return "validate";
    }
    return "";
}

const char* init_name(Init i) {
    switch (i) {
        case Init::tiles: return "tiles";
        case Init::kmeans: return "kmeans";
        case Init::mask_file: return "mask-file";
    }
    return "";
}

Channels load_image(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string("missing --") + what);
    try {
        return io::read_image(path);
    } catch (const io::ImageError& e) {
        throw InputError(e.what());
    }
}

std::optional<RegionMask> load_mask(const std::string& path, int w, int h) {
    if (path.empty()) return std::nullopt;
    try {
        RegionMask m = io::read_mask(path);
        if (m.width() != w || m.height() != h) throw InputError(path + ": size differs from the frames");
        return m;
    } catch (const io::ImageError& e) {
        throw InputError(e.what());
    }
}

void require_frame(const Channels& a, const Channels& b, const std::string& what) {
    if (a.size() != b.size() || a[0].width() != b[0].width() || a[0].height() != b[0].height())
        throw InputError(what + ": size or channel count differs from --input");
}

Partition initial_partition(const RunConfig& cfg, const Channels& image) {
    const int w = image[0].width();
    const int h = image[0].height();
    switch (cfg.init) {
        case Init::tiles: return tile_partition(w, h, cfg.n_regions);
        case Init::kmeans: return kmeans_partition(image, cfg.n_regions, cfg.seed);
        case Init::mask_file: {
            LabelField l;
            try {
                l = io::read_labels(cfg.init_mask);
            } catch (const io::ImageError& e) {
                throw InputError(e.what());
            }
            if (l.width != w || l.height != h) throw InputError(cfg.init_mask + ": size differs from --input");
            for (int v : l.labels)
                if (v >= cfg.n_regions) throw InputError(cfg.init_mask + ": label exceeds --n-regions");
            return Partition::from_labels(l, cfg.n_regions);
        }
    }
    throw ConfigError("unknown initializer");
}

// Per-region warps from flow when given, else estimated; regions that cannot
// support an estimate keep the identity.
std::vector<motion::WarpModel> region_warps(const motion::FramePair& pair, const LabelField& labels,
                                            int n, const RunConfig& cfg,
                                            const std::optional<motion::FlowField>& flow, std::ostream& log) {
    std::vector<motion::WarpModel> warps(static_cast<std::size_t>(n), motion::WarpModel::identity(cfg.warp));
    const motion::RobustNorm rho{cfg.rho_threshold};
    for (int i = 0; i < n; ++i) {
        const RegionMask r = mask_of_label(labels, i);
        try {
            warps[static_cast<std::size_t>(i)] = flow ? motion::fit_warp_from_flow(*flow, r, cfg.warp)
                                                      : motion::estimate_warp(pair, r, cfg.warp, rho);
        } catch (const std::exception& e) {
            log << "warning: region " << i << " keeps the identity warp (" << e.what() << ")\n";
        }
    }
    return warps;
}

std::string describe(const std::vector<motion::WarpModel>& warps) {
    std::string s;
    for (std::size_t i = 0; i < warps.size(); ++i) {
        s += "  region " + std::to_string(i) + ":";
        for (double p : warps[i].parameters()) s += " " + format_double(p);
        s += "\n";
    }
    return s;
}

struct MotionSetup {
    std::vector<motion::MotionChannel> channels;
    std::vector<motion::WarpModel> forward;
};

MotionSetup motion_setup(const RunConfig& cfg, const Channels& i0, const Partition& init, std::ostream& log) {
    const int w = i0[0].width();
    const int h = i0[0].height();
    const Channels i1 = load_image(cfg.input2, "input2");
    require_frame(i0, i1, cfg.input2);
    std::optional<motion::FlowField> flow;
    if (!cfg.flow.empty()) {
        try {
            flow = motion::read_flow(cfg.flow);
        } catch (const std::runtime_error& e) {
            throw InputError(e.what());
        }
        if (flow->u.width() != w || flow->u.height() != h) throw InputError(cfg.flow + ": size differs from --input");
    }
    const LabelField labels = hard_labels(init);
    MotionSetup s;
    const motion::FramePair fwd{i0, i1, load_mask(cfg.occlusion, w, h)};
    s.forward = region_warps(fwd, labels, cfg.n_regions, cfg, flow, log);
    s.channels.push_back({fwd, s.forward});
    log << "forward warps:\n" << describe(s.forward);
    if (!cfg.input_prev.empty()) {
        const Channels ip = load_image(cfg.input_prev, "input-prev");
        require_frame(i0, ip, cfg.input_prev);
        const motion::FramePair bwd{i0, ip, load_mask(cfg.occlusion_prev, w, h)};
        std::vector<motion::WarpModel> back;
        if (flow) {
            for (const motion::WarpModel& m : s.forward) back.push_back(m.inverse());
        } else {
            back = region_warps(bwd, labels, cfg.n_regions, cfg, std::nullopt, log);
        }
        log << "backward warps:\n" << describe(back);
        s.channels.push_back({bwd, back});
    }
    return s;
}

void write_trace(const RunConfig& cfg, const DescentTrace& trace) {
    const std::string path = cfg.trace.empty() ? (fs::path(cfg.out) / "trace.csv").string() : cfg.trace;
    std::ofstream os(path);
    if (!os) throw InputError("cannot write " + path);
    trace.write_csv(os);
}

int run_segmentation(const RunConfig& cfg, std::ostream& log) {
    const Channels image = load_image(cfg.input, "input");
    const Partition init = initial_partition(cfg, image);
    std::error_code ec;
    fs::create_directories(cfg.out, ec);
    if (ec) throw InputError("cannot create " + cfg.out + ": " + ec.message());
    write_config_file((fs::path(cfg.out) / "config.txt").string(), cfg);

    const motion::RobustNorm rho{cfg.rho_threshold};
    std::optional<MotionSetup> ms;
    if (cfg.mode == Mode::motion) ms = motion_setup(cfg, image, init, log);
    const GradientProvider provider =
        ms ? motion::motion_provider(ms->channels, rho, cfg.solver, cfg.descent.dilation_radius)
           : intensity_provider(image, cfg.solver, cfg.descent.dilation_radius);

    DescentResult result;
    try {
        result = run_descent(provider, init, cfg.descent);
    } catch (const DescentError& e) {
        write_trace(cfg, e.trace());
        log << "error: solver failed at iteration " << e.iteration() << ": " << e.what() << '\n';
        return kExitSolver;
    }
    const LabelField labels = hard_labels(result.partition);
    const fs::path out(cfg.out);
    io::write_labels((out / "labels.pgm").string(), labels);
    io::write_overlay((out / "overlay.png").string(), image, labels);
    write_trace(cfg, result.trace);
    log << "iterations: " << result.trace.rows.size() << (result.converged ? " (converged)" : " (max_iters reached)")
        << '\n';

    if (ms) {
        // warm start for the next frame
        const std::vector<motion::WarpModel> warps =
            region_warps(ms->channels.front().pair, labels, cfg.n_regions, cfg, std::nullopt, log);
        const motion::Propagation p = motion::propagate_labels(result.partition, warps);
        io::write_labels((out / "labels_next.pgm").string(), hard_labels(p.partition));
        for (std::size_t i = 0; i < p.empty.size(); ++i)
            if (p.empty[i]) log << "warning: region " << i << " is empty after propagation\n";
    }
    return kExitOk;
}

}  // namespace

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys{
        "mode",        "input",       "input2",         "input_prev",  "n_regions",   "alpha",
        "epsilon",     "dtau_scale",  "step_dtau",      "dilation",    "max_iters",   "convergence_window",
        "convergence_threshold",      "cg_tolerance",   "heat_dt",     "init",        "init_mask",
        "seed",        "out",         "trace",          "flow",        "occlusion",   "occlusion_prev",
        "warp",        "rho_threshold"};
    return keys;
}

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

RunConfig RunConfig::from_key_values(const KeyValues& kv) {
    RunConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "mode") {
            if (value == "intensity") c.mode = Mode::intensity;
            else if (value == "motion") c.mode = Mode::motion;
            else if (value == "validate") c.mode = Mode::validate;
            else throw ConfigError("unknown mode '" + value + "'");
        } else if (key == "input") c.input = value;
        else if (key == "input2") c.input2 = value;
        else if (key == "input_prev") c.input_prev = value;
        else if (key == "n_regions") c.n_regions = parse_number<int>(key, value);
        else if (key == "alpha") c.solver.alpha = parse_number<double>(key, value);
        else if (key == "epsilon") c.descent.epsilon = parse_number<double>(key, value);
        else if (key == "dtau_scale") c.descent.dtau_scale = parse_number<double>(key, value);
        else if (key == "step_dtau") {
            if (value.empty() || value == "auto") c.descent.step_dtau.reset();
            else c.descent.step_dtau = parse_number<double>(key, value);
        } else if (key == "dilation") c.descent.dilation_radius = parse_number<int>(key, value);
        else if (key == "max_iters") c.descent.max_iters = parse_number<int>(key, value);
        else if (key == "convergence_window") c.descent.convergence_window = parse_number<int>(key, value);
        else if (key == "convergence_threshold") c.descent.convergence_threshold = parse_number<double>(key, value);
        else if (key == "cg_tolerance") c.solver.cg_tolerance = parse_number<double>(key, value);
        else if (key == "heat_dt") c.solver.heat_dt = parse_number<double>(key, value);
        else if (key == "init") {
            if (value == "tiles") c.init = Init::tiles;
            else if (value == "kmeans") c.init = Init::kmeans;
            else if (value == "mask-file") c.init = Init::mask_file;
            else throw ConfigError("unknown initializer '" + value + "'");
        } else if (key == "init_mask") c.init_mask = value;
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "out") c.out = value;
        else if (key == "trace") c.trace = value;
        else if (key == "flow") c.flow = value;
        else if (key == "occlusion") c.occlusion = value;
        else if (key == "occlusion_prev") c.occlusion_prev = value;
        else if (key == "warp") {
            if (value == "translation") c.warp = motion::WarpKind::translation;
            else if (value == "affine") c.warp = motion::WarpKind::affine;
            else throw ConfigError("unknown warp '" + value + "'");
        } else if (key == "rho_threshold") c.rho_threshold = parse_number<double>(key, value);
        else throw ConfigError("unknown config key '" + key + "'");
    }
    return c;
}

KeyValues RunConfig::to_key_values() const {
    return {{"mode", mode_name(mode)},
            {"input", input},
            {"input2", input2},
            {"input_prev", input_prev},
            {"n_regions", std::to_string(n_regions)},
            {"alpha", format_double(solver.alpha)},
            {"epsilon", format_double(descent.epsilon)},
            {"dtau_scale", format_double(descent.dtau_scale)},
            {"step_dtau", descent.step_dtau ? format_double(*descent.step_dtau) : "auto"},
            {"dilation", std::to_string(descent.dilation_radius)},
            {"max_iters", std::to_string(descent.max_iters)},
            {"convergence_window", std::to_string(descent.convergence_window)},
            {"convergence_threshold", format_double(descent.convergence_threshold)},
            {"cg_tolerance", format_double(solver.cg_tolerance)},
            {"heat_dt", format_double(solver.heat_dt)},
            {"init", init_name(init)},
            {"init_mask", init_mask},
            {"seed", std::to_string(seed)},
            {"out", out},
            {"trace", trace},
            {"flow", flow},
            {"occlusion", occlusion},
            {"occlusion_prev", occlusion_prev},
            {"warp", warp == motion::WarpKind::affine ? "affine" : "translation"},
            {"rho_threshold", format_double(rho_threshold)}};
}

void RunConfig::validate() const {
    try {
        solver.validate();
        descent.validate();
        motion::RobustNorm{rho_threshold}.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    if (mode == Mode::validate) return;
    if (n_regions < 2 || n_regions > 255) throw ConfigError("n_regions must be in [2, 255]");
    if (input.empty()) throw ConfigError("missing --input");
    if (mode == Mode::motion && input2.empty()) throw ConfigError("motion mode needs --input2");
    if (init == Init::mask_file && init_mask.empty()) throw ConfigError("--init mask-file needs --init-mask");
    if (out.empty()) throw ConfigError("empty --out");
}

KeyValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config " + path);
    KeyValues kv;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError(path + ":" + std::to_string(n) + ": expected key=value");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void write_config_file(const std::string& path, const RunConfig& cfg) {
    std::ofstream os(path);
    if (!os) throw InputError("cannot write " + path);
    const KeyValues kv = cfg.to_key_values();
    for (const std::string& k : config_keys()) os << k << '=' << kv.at(k) << '\n';
}

int run(const RunConfig& cfg, std::ostream& log) {
    try {
        cfg.validate();
        if (cfg.mode == Mode::validate) {
            const auto results = validation::run_suite(cfg.seed);
            validation::print_table(log, results);
            for (const auto& r : results)
                if (!r.pass) return kExitValidation;
            return kExitOk;
        }
        return run_segmentation(cfg, log);
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        log << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const io::ImageError& e) {
        log << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const DimensionError& e) {
        log << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const SolverError& e) {
        log << "error: solver failed after " << e.iterations() << " iterations: " << e.what() << '\n';
        return kExitSolver;
    } catch (const motion::MotionError& e) {
        log << "error: " << e.what() << '\n';
        return kExitSolver;
    }
}

}  // namespace stss::cli
