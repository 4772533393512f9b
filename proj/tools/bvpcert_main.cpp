// Command-line front end: certify a problem file, solve it, verify a
// claimed solution, or run a manufactured-solution convergence study.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bvpcert/cli.hpp"
#include "bvpcert/version.hpp"

namespace {

struct CommonFlags {
    bvpcert::CliOverrides o;

    void attach(CLI::App* cmd) {
        cmd->add_option_function<int>(
            "--grid", [this](int v) { o.grid = v; }, "Override grid node count m");
        cmd->add_option_function<double>(
            "--tol", [this](double v) { o.tol = v; }, "Override solve tolerance");
        cmd->add_option_function<std::uint64_t>(
            "--seed", [this](std::uint64_t v) { o.seed = v; }, "Override sampling seed");
        cmd->add_option_function<int>(
            "--probes", [this](int v) { o.probes = v; }, "Override Green's-probe count for A0");
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified solver for nonlinear boundary value problems with "
                 "Riemann-Stieltjes boundary conditions"};
    app.set_version_flag("--version", std::string(bvpcert::kVersion));
    app.require_subcommand(1);

    std::string file, out_path, csv_path, exact;

    CLI::App* certify = app.add_subcommand("certify", "Compute the solvability certificate");
    certify->add_option("file", file, "Problem file")->required();
    certify->add_option("-o,--output", out_path, "Also write the certificate to this path");
    CommonFlags cert_flags;
    cert_flags.attach(certify);

    CLI::App* solve = app.add_subcommand("solve", "Certify, then solve to a verified residual");
    solve->add_option("file", file, "Problem file")->required();
    solve->add_option("-o,--output", csv_path, "Solution CSV path")->required();
    CommonFlags solve_flags;
    solve_flags.attach(solve);
    solve->add_flag_function(
        "--force", [&solve_flags](std::int64_t) { solve_flags.o.force = true; },
        "Solve even when the certificate fails (marked uncertified)");

    CLI::App* mms = app.add_subcommand("mms", "Manufactured-solution convergence study");
    mms->add_option("file", file, "Problem file")->required();
    mms->add_option("--exact", exact, "Exact solution, an expression in t")->required();
    CommonFlags mms_flags;
    mms_flags.attach(mms);

    CLI::App* residual = app.add_subcommand("residual", "Residuals of a claimed solution CSV");
    residual->add_option("file", file, "Problem file")->required();
    residual->add_option("csv", csv_path, "Solution CSV")->required();
    CommonFlags res_flags;
    res_flags.attach(residual);

    CLI11_PARSE(app, argc, argv);

    if (certify->parsed())
        return bvpcert::cmd_certify(file, cert_flags.o, std::cout, std::cerr, out_path);
    if (solve->parsed())
        return bvpcert::cmd_solve(file, csv_path, solve_flags.o, std::cout, std::cerr);
    if (mms->parsed())
        return bvpcert::cmd_mms(file, exact, mms_flags.o, std::cout, std::cerr);
    if (residual->parsed())
        return bvpcert::cmd_residual(file, csv_path, res_flags.o, std::cout, std::cerr);
    return bvpcert::exit_code::internal;
}
