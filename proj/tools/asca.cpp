// asca: streaming sparse coding with automaton-controlled dictionary growth.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asca/asca.hpp"

namespace {

int run_command(const std::string& config_path, const std::map<std::string, std::string>& flags) {
    using namespace asca;
    try {
        ConfigEntries file;
        if (!config_path.empty()) file = parse_config_text(detail::read_file(config_path));
        // Precedence: config file < ASCA_SEED < flags.
        if (const char* env = std::getenv("ASCA_SEED")) file.emplace_back("seed", env);
        ConfigEntries overrides;
        for (const auto& key : config_keys())
            if (auto it = flags.find(key.name); it != flags.end() && !it->second.empty())
                overrides.emplace_back(key.name, it->second);
        const RunSpec spec = parse_config(file, overrides);
        return cmd_run(spec, std::cout, std::cerr);
    } catch (...) {
        return report_failure(std::cerr);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming sparse coding whose dictionary grows under a learning-automaton controller"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "encode a dataset, growing the dictionary as needed");
    std::string config_path;
    run->add_option("--config", config_path, "key=value config file (a run manifest works too)");
    std::map<std::string, std::string> flags;
    for (const auto& key : asca::config_keys()) {
        flags[key.name];
        run->add_option(std::string("--") + key.name, flags[key.name], key.help);
    }

    auto* compare = app.add_subcommand("compare", "align T-MSE series of finished runs");
    std::vector<std::string> run_dirs;
    std::string compare_out = ".";
    compare->add_option("runs", run_dirs, "run directories")->required()->expected(2, -1);
    compare->add_option("--out", compare_out, "directory for compare.csv and compare_summary.csv");

    auto* recon = app.add_subcommand("reconstruct", "dump original/reconstructed patches and atoms as PGM");
    std::string ckpt, cache, recon_out = "recon";
    std::vector<std::size_t> indices;
    recon->add_option("--checkpoint", ckpt, "checkpoint.asca from a run")->required();
    recon->add_option("--cache", cache, "patch cache holding the inputs")->required();
    recon->add_option("--indices", indices, "patch indices to reconstruct")->delimiter(',');
    recon->add_option("--out", recon_out, "output directory");

    auto* cachep = app.add_subcommand("cache-patches", "build a PTCH patch cache");
    asca::CacheRequest req;
    std::string cache_out;
    cachep->add_option("--source", req.source, "pgm-dir | cifar10 | synthetic")->required();
    cachep->add_option("--dataset", req.dataset, "dataset path (not used for synthetic)");
    cachep->add_option("--limit", req.limit, "max images, 0 = all");
    cachep->add_option("--count", req.mixture.count, "synthetic: number of patches");
    cachep->add_option("--clusters", req.mixture.clusters, "synthetic: mixture components");
    cachep->add_option("--noise", req.mixture.noise, "synthetic: noise norm relative to unit centers");
    cachep->add_option("--seed", req.mixture.seed, "synthetic: seed");
    cachep->add_option("--out", cache_out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : asca::kExitUsage;
    }

    if (*run) return run_command(config_path, flags);
    if (*compare) {
        std::vector<std::filesystem::path> dirs(run_dirs.begin(), run_dirs.end());
        return asca::cmd_compare(dirs, compare_out, std::cout, std::cerr);
    }
    if (*recon) return asca::cmd_reconstruct(ckpt, cache, indices, recon_out, std::cout, std::cerr);
    if (*cachep) return asca::cmd_cache_patches(req, cache_out, std::cout, std::cerr);
    return asca::kExitUsage;
}
