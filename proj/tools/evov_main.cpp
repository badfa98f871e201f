// Command-line front end; talks to the engine exclusively through the C API.
#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "evov/evov.h"

namespace {

// Prints the result document (or the error) and converts the status into a
// process exit code.
int finish(evov_status st, char* out) {
    if (out != nullptr) {
        std::fputs(out, stdout);
        std::fputc('\n', stdout);
        evov_string_free(out);
    }
    if (st != EVOV_OK) std::fprintf(stderr, "error (%d): %s\n", static_cast<int>(st), evov_last_error());
    return static_cast<int>(st);
}

struct net_handle {
    evov_net* n = nullptr;
    ~net_handle() {
        if (n != nullptr) evov_net_close(n);
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"execute-order-validate ledger toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", evov_version());

    std::string scenario_path, rundir;
    auto* run = app.add_subcommand("run", "run a scenario in the simulator and audit it");
    run->add_option("scenario", scenario_path, "scenario JSON file")->required();
    run->add_option("--rundir", rundir, "directory for ledgers, metrics and the report");

    std::string matrix_path, bench_out;
    auto* bench = app.add_subcommand("bench", "run a benchmark sweep");
    bench->add_option("matrix", matrix_path, "matrix JSON file")->required();
    bench->add_option("--out", bench_out, "directory for summaries and per-cell metrics");

    std::string verify_dir;
    auto* verify = app.add_subcommand("verify", "re-validate stored ledgers from scratch");
    verify->add_option("rundir", verify_dir, "run directory or a single ledger directory")->required();

    auto* fabcoin = app.add_subcommand("fabcoin", "operate a persistent local coin network");
    fabcoin->require_subcommand(1);
    std::string net_dir = "fabcoin-net";
    fabcoin->add_option("--net", net_dir, "network directory (created on first use)");

    std::string owner, from, to, label = "usd";
    std::uint64_t amount = 0;
    std::uint32_t outputs = 1;

    auto* mint = fabcoin->add_subcommand("mint", "mint new coins to a user");
    mint->add_option("--owner", owner, "receiving user")->required();
    mint->add_option("--amount", amount, "total value to mint")->required();
    mint->add_option("--outputs", outputs, "number of coins to split the value into");
    mint->add_option("--label", label, "currency label");

    auto* spend = fabcoin->add_subcommand("spend", "transfer value between users");
    spend->add_option("--from", from, "paying user")->required();
    spend->add_option("--to", to, "receiving user")->required();
    spend->add_option("--amount", amount, "value to transfer")->required();
    spend->add_option("--label", label, "currency label");

    auto* balance = fabcoin->add_subcommand("balance", "show a user's coins");
    balance->add_option("--owner", owner, "user to inspect")->required();
    balance->add_option("--label", label, "currency label");

    CLI11_PARSE(app, argc, argv);

    char* out = nullptr;
    evov_status st = EVOV_OK;
    if (*run) {
        st = evov_run_scenario(scenario_path.c_str(), rundir.empty() ? nullptr : rundir.c_str(),
                               &out);
    } else if (*bench) {
        st = evov_bench_run(matrix_path.c_str(), bench_out.empty() ? nullptr : bench_out.c_str(),
                            &out);
    } else if (*verify) {
        st = evov_verify_run(verify_dir.c_str(), &out);
    } else {
        net_handle h;
        st = evov_net_open(net_dir.c_str(), &h.n);
        if (st != EVOV_OK) return finish(st, nullptr);
        if (*mint) {
            st = evov_net_mint(h.n, owner.c_str(), amount, outputs, label.c_str(), &out);
        } else if (*spend) {
            st = evov_net_spend(h.n, from.c_str(), to.c_str(), amount, label.c_str(), &out);
        } else {
            st = evov_net_balance(h.n, owner.c_str(), label.c_str(), &out);
        }
    }
    return finish(st, out);
}
