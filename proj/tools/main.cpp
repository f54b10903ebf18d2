#include <exception>
#include <iostream>

#include "commands.hpp"
#include "pcd/errors.hpp"

int main(int argc, char** argv) {
    using namespace pcd::cli;
    CLI::App app{"Positional contrastive decoding experiments"};
    app.require_subcommand(1);
    Action action;
    register_freqs(app, action);
    register_simulate_decay(app, action);
    register_psa(app, action);
    register_ablate(app, action);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        action();
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const pcd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pcd::DimensionError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pcd::DomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const pcd::InsufficientDataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
