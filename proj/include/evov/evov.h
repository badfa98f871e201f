/* C interface to the evov engine: scenario runs, benchmark sweeps, offline
 * chain verification, and a small persistent single-node coin network.
 *
 * Conventions: every function returns an evov_status; 0 is success. Output
 * strings (*out) are heap-allocated JSON documents that the caller releases
 * with evov_string_free. On failure *out is untouched and a thread-local
 * message is available from evov_last_error until the next call on that
 * thread. */
#ifndef EVOV_H
#define EVOV_H

#include <stdint.h>

#if defined(_WIN32)
#define EVOV_API
#else
#define EVOV_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum evov_status {
    EVOV_OK = 0,
    EVOV_ERR_ARGUMENT = 1,  /* null or malformed argument */
    EVOV_ERR_IO = 2,        /* file or directory access failed */
    EVOV_ERR_INPUT = 3,     /* scenario/matrix/ledger content rejected */
    EVOV_ERR_CHECK = 4,     /* finished, but an audit check failed (*out is set) */
    EVOV_ERR_APP = 5,       /* application rejection, e.g. insufficient funds */
    EVOV_ERR_INTERNAL = 6
} evov_status;

/* Library version string, e.g. "1.0.0". Static storage; do not free. */
EVOV_API const char* evov_version(void);

/* Message for the last failing call on this thread; empty string if none. */
EVOV_API const char* evov_last_error(void);

EVOV_API void evov_string_free(char* s);

/* Runs the scenario file end to end inside the deterministic simulator and
 * audits the outcome. When rundir is non-null the peers' ledgers plus
 * metrics.csv, blocks.csv, scenario.json and report.json are written there.
 * *out receives the report JSON (also on EVOV_ERR_CHECK). */
EVOV_API evov_status evov_run_scenario(const char* scenario_path, const char* rundir, char** out);

/* Runs the benchmark sweep described by the matrix file. When out_dir is
 * non-null summary.csv, latency_stages.csv, bench.json and per-cell metrics
 * are written there. *out receives the sweep JSON (also on EVOV_ERR_CHECK). */
EVOV_API evov_status evov_bench_run(const char* matrix_path, const char* out_dir, char** out);

/* Offline verification of stored ledgers: dir is either a run directory (with
 * peers/<id>/ underneath) or a single ledger directory holding blocks.dat.
 * EVOV_ERR_CHECK signals findings; *out carries them either way. */
EVOV_API evov_status evov_verify_run(const char* dir, char** out);

/* A persistent one-peer deployment rooted at a directory: every operation is
 * endorsed, ordered into its own block, validated, and committed before the
 * call returns. A fresh directory is initialized with users alice, bob and
 * carol plus the central bank cb0; reopening resumes the stored chain. */
typedef struct evov_net evov_net;

EVOV_API evov_status evov_net_open(const char* dir, evov_net** out);
EVOV_API void evov_net_close(evov_net* n);

/* Mints `amount` split over `outputs` coins to `owner`. *out describes the
 * committed transaction: txid, block_seq, verdict. A committed-but-invalid
 * transaction still returns EVOV_OK; check "valid" in the JSON. */
EVOV_API evov_status evov_net_mint(evov_net* n, const char* owner, uint64_t amount, uint32_t outputs,
                          const char* label, char** out);

/* Spends `amount` from `from` to `to`, change returned to `from`. */
EVOV_API evov_status evov_net_spend(evov_net* n, const char* from, const char* to, uint64_t amount,
                           const char* label, char** out);

/* Balance and coin list of `owner` for `label`. */
EVOV_API evov_status evov_net_balance(evov_net* n, const char* owner, const char* label, char** out);

#ifdef __cplusplus
}
#endif

#endif /* EVOV_H */
