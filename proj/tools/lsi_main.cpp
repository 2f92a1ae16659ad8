#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lsi/runs.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
};

void add_common(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "key = value config file");
    sub->add_option("--set", args.overrides, "override, section.key=value")->take_all();
    sub->add_option("--out", args.out_dir, "run directory (default: runs/<cmd>-<stamp>-seed<seed>)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent-space imaging pipeline"};
    app.require_subcommand(1);

    using Runner = std::function<std::string(const lsi::RunConfig&, const std::string&)>;
    const std::vector<std::pair<std::pair<std::string, std::string>, Runner>> subcommands = {
        {{"make-dataset", "write a synthetic labeled image set"}, lsi::run_make_dataset},
        {{"pretrain", "train the generator/inversion autoencoder"}, lsi::run_pretrain},
        {{"train", "train masks + digital encoder against a frozen autoencoder"}, lsi::run_train},
        {{"reconstruct", "reconstruct one image through a trained system"}, lsi::run_reconstruct},
        {{"evaluate", "score a trained system on a dataset split"}, lsi::run_evaluate},
        {{"fsi", "Fourier single-pixel baseline on the test split"}, lsi::run_fsi},
        {{"calibrate", "white-image global scale calibration"}, lsi::run_calibrate},
        {{"finetune", "adapt the digital encoder to sensed measurements"}, lsi::run_finetune},
        {{"export-latents", "dump per-image latent vectors to CSV"}, lsi::run_export_latents},
        {{"export-masks", "dump binary masks as PNGs"}, lsi::run_export_masks},
    };

    std::vector<CommonArgs> args(subcommands.size());
    Runner selected;
    const CommonArgs* selected_args = nullptr;
    for (std::size_t i = 0; i < subcommands.size(); ++i) {
        CLI::App* sub = app.add_subcommand(subcommands[i].first.first, subcommands[i].first.second);
        add_common(sub, args[i]);
        const Runner& runner = subcommands[i].second;
        const CommonArgs& a = args[i];
        sub->callback([&selected, &selected_args, &runner, &a] {
            selected = runner;
            selected_args = &a;
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        lsi::RunConfig cfg;
        if (!selected_args->config_path.empty()) cfg.apply_file(selected_args->config_path);
        for (const auto& o : selected_args->overrides) cfg.apply_override(o);
        selected(cfg, selected_args->out_dir);
        return 0;
    } catch (const lsi::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
