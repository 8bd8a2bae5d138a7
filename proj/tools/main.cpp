#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "stss/kernels.hpp"
#include "stss/run.hpp"

int main(int argc, char** argv) {
    using namespace stss::cli;
    CLI::App app{"stss: multi-scale region segmentation of images and frame pairs"};

    // values stay text until the merged map is parsed
    struct Flag {
        std::string name;
        std::string key;
        std::string help;
    };
    const std::vector<Flag> flags{
        {"--mode", "mode", "intensity | motion | validate"},
        {"--input", "input", "image to segment (PGM, PPM or PNG)"},
        {"--input2", "input2", "motion: the following frame"},
        {"--input-prev", "input_prev", "motion: the preceding frame, adds a backward channel"},
        {"--n-regions", "n_regions", "number of regions (default 2)"},
        {"--alpha", "alpha", "largest smoothing scale (default 20)"},
        {"--epsilon", "epsilon", "indicator diffusion weight (default 0.005)"},
        {"--dtau-scale", "dtau_scale", "multiplier on the normalized step (default 1)"},
        {"--step-dtau", "step_dtau", "fixed step instead of the normalized one, or auto"},
        {"--dilation", "dilation", "band radius in sites (default 3)"},
        {"--max-iters", "max_iters", "iteration limit (default 500)"},
        {"--init", "init", "tiles | kmeans | mask-file (default kmeans)"},
        {"--init-mask", "init_mask", "label image for --init mask-file"},
        {"--seed", "seed", "seed for the k-means initializer"},
        {"--out", "out", "output directory (default out)"},
        {"--trace", "trace", "trace CSV path (default <out>/trace.csv)"},
        {"--flow", "flow", "motion: dense forward flow file"},
        {"--occlusion", "occlusion", "motion: occlusion mask for the forward pair, 255 = occluded"},
        {"--occlusion-prev", "occlusion_prev", "motion: occlusion mask for the backward pair"},
        {"--warp", "warp", "motion: translation | affine"},
        {"--rho-threshold", "rho_threshold", "motion: robust residual threshold (default 0.2)"},
        {"--cg-tolerance", "cg_tolerance", "relative residual for the linear solves (default 1e-8)"}};
    std::vector<std::string> values(flags.size());
    for (std::size_t i = 0; i < flags.size(); ++i) app.add_option(flags[i].name, values[i], flags[i].help);
    std::string config_path;
    app.add_option("--config", config_path, "key=value file; flags override it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    stss::apply_thread_limit_from_env();
    try {
        KeyValues kv = config_path.empty() ? KeyValues{} : read_config_file(config_path);
        for (std::size_t i = 0; i < flags.size(); ++i)
            if (app.count(flags[i].name) > 0) kv[flags[i].key] = values[i];
        return run(RunConfig::from_key_values(kv), std::cerr);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    }
}
