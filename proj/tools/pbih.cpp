// pbih: certificate calculator and radial solver for p-biharmonic Navier problems.

#include <CLI11.hpp>

#include "pbih/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Certified lambda-intervals and radial critical points for p-biharmonic Navier problems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", pbih::cli::kVersion);

    pbih::cli::CommonOptions common;
    std::string config, out = "-", prefix = "solution", init = "udelta", method = "minimize", range;
    double lambda = 0.0;
    std::optional<int> multistart;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    auto* certify = app.add_subcommand("certify", "Evaluate every hypothesis and the certified intervals");
    certify->add_option("config", config, "Configuration file")->required();
    certify->add_option("-o,--output", out, "Report path ('-' for stdout)");
    certify->add_flag("--timestamp", common.timestamp, "Record the wall-clock time in the manifest");

    auto* solve = app.add_subcommand("solve", "Compute one critical point on a ball");
    solve->add_option("config", config, "Configuration file")->required();
    solve->add_option("-l,--lambda", lambda, "Parameter lambda > 0")->required();
    solve->add_option("-i,--init", init, "zero | udelta | file:<csv>");
    solve->add_option("-m,--method", method, "minimize | picard | mountain_pass");
    solve->add_option("-o,--output", prefix, "Output prefix (<prefix>.csv, <prefix>.json)");
    solve->add_flag("--timestamp", common.timestamp, "Record the wall-clock time in the manifest");

    auto* branch = app.add_subcommand("branch", "Multistart sweep over a lambda range");
    branch->add_option("config", config, "Configuration file")->required();
    branch->add_option("-r,--range", range, "a:b:n")->required();
    branch->add_option("--multistart", multistart, "Starts per lambda (>= 2)");
    branch->add_option("--seed", seed, "Seed for the random starts");
    branch->add_option("--threads", threads, "Worker threads (0: hardware concurrency)");
    branch->add_option("-o,--output", out, "CSV path ('-' for stdout)");

    auto* testfun = app.add_subcommand("testfun", "Sample the test functions and their constants");
    testfun->add_option("config", config, "Configuration file")->required();
    testfun->add_option("-o,--output", prefix, "Output prefix (<prefix>.csv, <prefix>.json)");
    testfun->add_flag("--timestamp", common.timestamp, "Record the wall-clock time in the manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : pbih::cli::kUsage;
    }

    if (*certify)
        return pbih::cli::cmd_certify(config, out, common);
    if (*solve)
        return pbih::cli::cmd_solve(config, lambda, init, prefix, method, common);
    if (*branch)
        return pbih::cli::cmd_branch(config, range, multistart, seed, out, threads);
    return pbih::cli::cmd_testfun(config, prefix, common);
}
