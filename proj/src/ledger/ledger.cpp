#include "ledger/ledger.hpp"

#include <fcntl.h>
#include <unistd.h>
#include <zlib.h>

#include <cstring>

#include "common/crypto.hpp"

namespace evov::ledger {

namespace {

std::uint32_t crc32_of(byte_view data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    crc = ::crc32(crc, data.data(), static_cast<uInt>(data.size()));
    return static_cast<std::uint32_t>(crc);
}

std::uint32_t read_u32le(const std::uint8_t* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return v;
}

void put_u32le(bytes& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t read_u64le(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

}  // namespace

const versioned_entry* state_snapshot::get(const std::string& key) const {
    auto it = map_->find(key);
    return it == map_->end() ? nullptr : &it->second;
}

std::vector<std::pair<std::string, versioned_entry>> state_snapshot::range(const std::string& start,
                                                                           const std::string& end) const {
    std::vector<std::pair<std::string, versioned_entry>> out;
    for (auto it = map_->lower_bound(start); it != map_->end() && it->first < end; ++it)
        out.emplace_back(it->first, it->second);
    return out;
}

record_file::~record_file() {
    if (fd_ >= 0) ::close(fd_);
}

record_file::record_file(record_file&& other) noexcept
    : fd_(other.fd_), mem_(std::move(other.mem_)), memory_(other.memory_), cached_size_(other.cached_size_) {
    other.fd_ = -1;
}

record_file& record_file::operator=(record_file&& other) noexcept {
    if (this != &other) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = other.fd_;
        mem_ = std::move(other.mem_);
        memory_ = other.memory_;
        cached_size_ = other.cached_size_;
        other.fd_ = -1;
    }
    return *this;
}

record_file record_file::open(const std::optional<std::filesystem::path>& path) {
    record_file f;
    if (path) {
        f.memory_ = false;
        f.fd_ = ::open(path->c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
        if (f.fd_ < 0) throw error("cannot open " + path->string() + ": " + std::strerror(errno));
        off_t end = ::lseek(f.fd_, 0, SEEK_END);
        if (end < 0) throw error("lseek failed");
        f.cached_size_ = static_cast<std::uint64_t>(end);
    }
    return f;
}

std::uint64_t record_file::size() const { return memory_ ? mem_.size() : cached_size_; }

void record_file::append(byte_view payload) {
    bytes record;
    record.reserve(payload.size() + 8);
    put_u32le(record, static_cast<std::uint32_t>(payload.size()));
    record.insert(record.end(), payload.begin(), payload.end());
    put_u32le(record, crc32_of(payload));
    if (memory_) {
        mem_.insert(mem_.end(), record.begin(), record.end());
        return;
    }
    ssize_t n = ::pwrite(fd_, record.data(), record.size(), static_cast<off_t>(cached_size_));
    if (n < 0 || static_cast<std::size_t>(n) != record.size()) throw error("pwrite failed");
    cached_size_ += record.size();
}

void record_file::append_partial(byte_view payload, std::size_t payload_prefix) {
    bytes partial;
    put_u32le(partial, static_cast<std::uint32_t>(payload.size()));
    partial.insert(partial.end(), payload.begin(), payload.begin() + payload_prefix);
    if (memory_) {
        mem_.insert(mem_.end(), partial.begin(), partial.end());
        return;
    }
    ssize_t n = ::pwrite(fd_, partial.data(), partial.size(), static_cast<off_t>(cached_size_));
    if (n < 0 || static_cast<std::size_t>(n) != partial.size()) throw error("pwrite failed");
    cached_size_ += partial.size();
}

bytes record_file::read(std::uint64_t off, std::size_t n) const {
    bytes out(n);
    if (memory_) {
        if (off + n > mem_.size()) throw error("record_file: short read");
        std::copy(mem_.begin() + off, mem_.begin() + off + n, out.begin());
        return out;
    }
    ssize_t got = ::pread(fd_, out.data(), n, static_cast<off_t>(off));
    if (got < 0 || static_cast<std::size_t>(got) != n) throw error("record_file: short read");
    return out;
}

void record_file::truncate(std::uint64_t new_size) {
    if (memory_) {
        mem_.resize(new_size);
        return;
    }
    if (::ftruncate(fd_, static_cast<off_t>(new_size)) != 0) throw error("ftruncate failed");
    cached_size_ = new_size;
}

record_file::scan_result record_file::scan() const {
    scan_result res;
    std::uint64_t total = size();
    bytes all = total ? read(0, total) : bytes{};
    std::uint64_t off = 0;
    while (off + 8 <= total) {
        std::uint32_t len = read_u32le(all.data() + off);
        if (off + 8 + len > total) break;  // torn tail
        byte_view payload(all.data() + off + 4, len);
        std::uint32_t crc = read_u32le(all.data() + off + 4 + len);
        if (crc != crc32_of(payload)) break;
        res.offsets.push_back(off);
        res.payloads.emplace_back(payload.begin(), payload.end());
        off += 8 + len;
    }
    res.good_end = off;
    res.torn_tail = off != total;
    return res;
}

atomic_file atomic_file::open(const std::optional<std::filesystem::path>& path) {
    atomic_file f;
    f.path_ = path;
    return f;
}

void atomic_file::replace(byte_view content) {
    if (!path_) {
        mem_ = bytes(content.begin(), content.end());
        return;
    }
    std::filesystem::path tmp = *path_;
    tmp += ".tmp";
    int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
    if (fd < 0) throw error("cannot open " + tmp.string());
    ssize_t n = ::write(fd, content.data(), content.size());
    ::close(fd);
    if (n < 0 || static_cast<std::size_t>(n) != content.size()) throw error("write failed: " + tmp.string());
    std::filesystem::rename(tmp, *path_);
}

std::optional<bytes> atomic_file::read() const {
    if (!path_) return mem_;
    int fd = ::open(path_->c_str(), O_RDONLY | O_CLOEXEC);
    if (fd < 0) return std::nullopt;
    bytes out;
    std::uint8_t buf[4096];
    ssize_t n;
    while ((n = ::read(fd, buf, sizeof buf)) > 0) out.insert(out.end(), buf, buf + n);
    ::close(fd);
    if (n < 0) throw error("read failed: " + path_->string());
    return out;
}

bytes serialize_state(const state_map& m) {
    core::wire_writer w;
    w.u32(static_cast<std::uint32_t>(m.size()));
    for (const auto& [key, entry] : m) {
        w.str(key);
        w.blob(as_view(entry.value));
        w.u64(entry.ver.block_num);
        w.u64(entry.ver.tx_num);
    }
    return w.take();
}

state_map deserialize_state(byte_view data) {
    core::wire_reader r(data);
    std::uint32_t n = r.u32();
    state_map m;
    for (std::uint32_t i = 0; i < n; ++i) {
        std::string key = r.str();
        versioned_entry e;
        e.value = r.blob();
        e.ver.block_num = r.u64();
        e.ver.tx_num = r.u64();
        m.emplace(std::move(key), std::move(e));
    }
    r.expect_end();
    return m;
}

block_ledger block_ledger::open(ledger_options opts, const revalidate_fn& revalidate) {
    block_ledger led;
    if (opts.checkpoint_every == 0) opts.checkpoint_every = 1;
    led.opts_ = opts;
    if (opts.dir) {
        std::filesystem::create_directories(*opts.dir);
        led.blocks_ = record_file::open(*opts.dir / "blocks.dat");
        led.savepoint_file_ = atomic_file::open(*opts.dir / "savepoint");
        led.checkpoint_file_ = atomic_file::open(*opts.dir / "state.ckpt");
    } else {
        led.blocks_ = record_file::open(std::nullopt);
        led.savepoint_file_ = atomic_file::open(std::nullopt);
        led.checkpoint_file_ = atomic_file::open(std::nullopt);
    }

    auto scanned = led.blocks_.scan();

    // Decode and chain-check what the scan produced; anything from the first
    // failure on is treated as a torn tail and truncated.
    std::vector<core::block> chain;
    hash256 prev{};
    std::size_t good = 0;
    for (; good < scanned.payloads.size(); ++good) {
        core::block b;
        try {
            b = core::decode_block_bytes(as_view(scanned.payloads[good]));
        } catch (const core::codec_error&) {
            break;
        }
        if (b.header.seq != good) break;
        if (b.header.prev_hash != prev) break;
        if (!b.metadata_bitmask) break;
        prev = core::hash_block(b);
        chain.push_back(std::move(b));
    }
    if (good < scanned.payloads.size()) {
        led.blocks_.truncate(scanned.offsets[good]);
        scanned.offsets.resize(good);
    } else if (scanned.torn_tail) {
        led.blocks_.truncate(scanned.good_end);
    }
    led.offsets_ = scanned.offsets;
    led.last_hash_ = prev;

    std::optional<std::uint64_t> stored_savepoint;
    if (auto sp = led.savepoint_file_.read(); sp && sp->size() == 8) stored_savepoint = read_u64le(sp->data());
    if (stored_savepoint && (chain.empty() || *stored_savepoint > chain.back().header.seq))
        throw fatal_corruption("savepoint beyond intact chain");

    for (std::size_t seq = 0; seq < chain.size(); ++seq) {
        const core::block& b = chain[seq];
        for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
            hash256 id = b.txs[i].prop.tx_id;
            led.txid_index_.emplace(
                id, tx_location{seq, i, core::bitmask_get(*b.metadata_bitmask, i)});
        }
    }

    // Newest usable state checkpoint; a damaged checkpoint is just a cache
    // miss and forces a full replay.
    std::optional<std::uint64_t> ck_height;
    if (auto ck = led.checkpoint_file_.read(); ck && ck->size() >= 12) {
        byte_view payload(ck->data(), ck->size() - 4);
        std::uint32_t crc = read_u32le(ck->data() + ck->size() - 4);
        if (crc == crc32_of(payload)) {
            std::uint64_t h = read_u64le(payload.data());
            try {
                state_map m = deserialize_state(payload.subspan(8));
                if (chain.empty() || h > chain.back().header.seq)
                    throw fatal_corruption("state checkpoint beyond intact chain");
                ck_height = h;
                led.state_ = std::make_shared<state_map>(std::move(m));
            } catch (const core::codec_error&) {
            }
        }
    }

    std::uint64_t replay_from = ck_height ? *ck_height + 1 : 0;
    for (std::uint64_t seq = replay_from; seq < chain.size(); ++seq) {
        const core::block& b = chain[seq];
        std::vector<bool> validity;
        for (std::uint32_t i = 0; i < b.txs.size(); ++i)
            validity.push_back(core::bitmask_get(*b.metadata_bitmask, i));
        if (revalidate) {
            auto rebits = revalidate(b, state_snapshot(led.state_, seq ? seq - 1 : 0));
            if (rebits != validity) throw fatal_corruption("stored bitmask does not revalidate");
        }
        led.apply_block_state(b, validity);
    }

    if (!chain.empty()) {
        led.savepoint_ = chain.back().header.seq;
        led.write_savepoint(led.savepoint_);
        led.write_checkpoint();
    }
    return led;
}

void block_ledger::fail_if(commit_point point, std::uint64_t seq) {
    if (failpoint_ && failpoint_->first == point && failpoint_->second == seq) {
        failpoint_.reset();
        throw crash_injected();
    }
}

void block_ledger::set_failpoint(commit_point point, std::uint64_t seq) { failpoint_ = {point, seq}; }

void block_ledger::commit_block(core::block b, const std::vector<bool>& validity) {
    std::uint64_t expected = offsets_.size();
    if (b.header.seq != expected)
        throw out_of_order("commit of block " + std::to_string(b.header.seq) + ", expected " +
                           std::to_string(expected));
    if (b.header.prev_hash != last_hash_) throw out_of_order("prev_hash mismatch");
    if (validity.size() != b.txs.size()) throw error("validity size mismatch");

    std::uint64_t seq = b.header.seq;
    fail_if(commit_point::before_append, seq);

    b.metadata_bitmask = core::bitmask_pack(validity);
    bytes payload = core::encode_bytes(b);

    if (failpoint_ && failpoint_->first == commit_point::mid_append && failpoint_->second == seq) {
        failpoint_.reset();
        blocks_.append_partial(as_view(payload), payload.size() / 2);
        throw crash_injected();
    }

    std::uint64_t off = blocks_.size();
    blocks_.append(as_view(payload));
    fail_if(commit_point::after_append, seq);

    offsets_.push_back(off);
    for (std::uint32_t i = 0; i < b.txs.size(); ++i)
        txid_index_.emplace(b.txs[i].prop.tx_id, tx_location{seq, i, validity[i]});
    last_hash_ = core::hash_block(b);
    fail_if(commit_point::after_index, seq);

    apply_block_state(b, validity);
    if (seq % opts_.checkpoint_every == 0) write_checkpoint();
    fail_if(commit_point::after_state, seq);

    write_savepoint(seq);
    savepoint_ = seq;
}

void block_ledger::apply_block_state(const core::block& b, const std::vector<bool>& validity) {
    auto next = std::make_shared<state_map>(*state_);
    for (std::uint32_t i = 0; i < b.txs.size(); ++i) {
        if (!validity[i]) continue;
        const core::transaction& t = b.txs[i];
        if (t.type != core::tx_type::normal) continue;
        for (const auto& wconst : t.rwset.writes) {
            if (wconst.kind == core::write_kind::put)
                (*next)[wconst.key] = versioned_entry{wconst.value, {b.header.seq, i}};
            else
                next->erase(wconst.key);
        }
    }
    state_ = std::move(next);
}

void block_ledger::write_checkpoint() {
    core::wire_writer w;
    w.u64(offsets_.empty() ? 0 : offsets_.size() - 1);
    bytes payload;
    {
        bytes head = w.take();
        bytes body = serialize_state(*state_);
        payload.reserve(head.size() + body.size() + 4);
        payload.insert(payload.end(), head.begin(), head.end());
        payload.insert(payload.end(), body.begin(), body.end());
    }
    put_u32le(payload, crc32_of(byte_view(payload.data(), payload.size())));
    checkpoint_file_.replace(as_view(payload));
}

void block_ledger::write_savepoint(std::uint64_t seq) {
    bytes b;
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(seq >> (8 * i)));
    savepoint_file_.replace(as_view(b));
}

const versioned_entry* block_ledger::get_latest(const std::string& key) const {
    auto it = state_->find(key);
    return it == state_->end() ? nullptr : &it->second;
}

std::uint64_t block_ledger::height() const {
    if (offsets_.empty()) throw error("empty ledger has no height");
    return offsets_.size() - 1;
}

bytes block_ledger::get_block_bytes(std::uint64_t seq) const {
    if (seq >= offsets_.size()) throw not_found("no block " + std::to_string(seq));
    std::uint64_t off = offsets_[seq];
    bytes lenb = blocks_.read(off, 4);
    std::uint32_t len = read_u32le(lenb.data());
    return blocks_.read(off + 4, len);
}

core::block block_ledger::get_block(std::uint64_t seq) const {
    return core::decode_block_bytes(as_view(get_block_bytes(seq)));
}

std::pair<tx_location, core::transaction> block_ledger::get_tx(const hash256& txid) const {
    auto it = txid_index_.find(txid);
    if (it == txid_index_.end()) throw not_found("no transaction " + to_hex(txid));
    core::block b = get_block(it->second.seq);
    if (it->second.tx_index >= b.txs.size()) throw error("txid index out of range");
    return {it->second, b.txs[it->second.tx_index]};
}

bytes block_ledger::state_bytes() const { return serialize_state(*state_); }

hash256 block_ledger::state_digest() const { return crypto::sha256(as_view(state_bytes())); }

}  // namespace evov::ledger
