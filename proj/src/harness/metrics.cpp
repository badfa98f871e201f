#include "harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace evov::harness {

static std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p);
    if (!out) throw error("cannot write " + p.string());
    return out;
}

void write_tx_csv(const std::filesystem::path& p, const std::vector<tx_metric>& rows) {
    auto out = open_out(p);
    out << "txid,client,op,code,block_seq,tx_index,retries,submit_us,endorsed_us,"
           "ordered_us,val_start_us,committed_us,endorse_lat_us,order_lat_us,"
           "validate_lat_us,e2e_lat_us\n";
    for (const auto& r : rows) {
        out << to_hex(byte_view(r.txid.data(), r.txid.size())) << ',' << r.client << ',' << r.op
            << ',' << r.code << ',' << r.block_seq << ',' << r.tx_index << ',' << r.retries << ','
            << r.submit_us << ',' << r.endorsed_us << ',' << r.ordered_us << ',' << r.val_start_us
            << ',' << r.committed_us << ',' << r.endorse_lat() << ',' << r.order_lat() << ','
            << r.validate_lat() << ',' << r.e2e_lat() << '\n';
    }
}

void write_block_csv(const std::filesystem::path& p, const std::vector<block_metric>& rows) {
    auto out = open_out(p);
    out << "seq,txs,valid,cut_us,received_us,val_start_us,committed_us,vscc_span_us,"
           "rw_span_us,ledger_span_us\n";
    for (const auto& r : rows) {
        out << r.seq << ',' << r.txs << ',' << r.valid << ',' << r.cut_us << ',' << r.received_us
            << ',' << r.val_start_us << ',' << r.committed_us << ',' << r.vscc_span_us << ','
            << r.rw_span_us << ',' << r.ledger_span_us << '\n';
    }
}

double percentile(std::vector<double> v, double p) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    if (rank == 0) rank = 1;
    if (rank > v.size()) rank = v.size();
    return v[rank - 1];
}

stage_samples collect_stage_samples(const run_metrics& m, std::uint64_t from_us,
                                    std::uint64_t to_us) {
    std::map<std::uint64_t, const block_metric*> by_seq;
    for (const auto& b : m.blocks) by_seq.emplace(b.seq, &b);
    stage_samples s;
    for (const auto& t : m.txs) {
        if (t.code != "valid") continue;
        if (t.committed_us < from_us || t.committed_us > to_us) continue;
        s.e2e.push_back(static_cast<double>(t.e2e_lat()));
        s.endorse.push_back(static_cast<double>(t.endorse_lat()));
        s.order.push_back(static_cast<double>(t.order_lat()));
        s.validate.push_back(static_cast<double>(t.validate_lat()));
        auto it = by_seq.find(t.block_seq);
        const auto* b = it == by_seq.end() ? nullptr : it->second;
        s.vscc.push_back(b ? static_cast<double>(b->vscc_span_us) : 0.0);
        s.rw.push_back(b ? static_cast<double>(b->rw_span_us) : 0.0);
        s.ledger.push_back(b ? static_cast<double>(b->ledger_span_us) : 0.0);
    }
    return s;
}

latency_summary summarize_latencies(const std::vector<double>& v, std::size_t min_samples) {
    latency_summary s;
    s.count = v.size();
    if (v.empty()) return s;
    double sum = 0;
    s.min = v.front();
    s.max = v.front();
    for (double x : v) {
        sum += x;
        s.min = std::min(s.min, x);
        s.max = std::max(s.max, x);
    }
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() >= min_samples) {
        s.p50 = percentile(v, 50);
        s.p95 = percentile(v, 95);
        s.p99 = percentile(v, 99);
    }
    return s;
}

}  // namespace evov::harness
