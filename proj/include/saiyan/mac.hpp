#pragma once

// Downlink feedback: command classes and addressing, ALOHA slot selection,
// ACK-driven retransmission, channel hopping and rate adaptation.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "saiyan/random.hpp"
#include "saiyan/types.hpp"
#include "saiyan/waveform.hpp"

namespace saiyan::mac {

struct Retransmit {
  std::uint32_t seq;
};
struct Hop {
  std::uint32_t channel;
};
struct Rate {
  int sf;
  int k_bits;
};
struct SensorCtl {
  bool on;
};
struct Ack {};

using CommandKind = std::variant<Retransmit, Hop, Rate, SensorCtl, Ack>;

struct Unicast {
  std::uint32_t tag;
};
struct Multicast {
  std::vector<std::uint32_t> tags;
};
struct Broadcast {};

using Addressing = std::variant<Unicast, Multicast, Broadcast>;

struct DownlinkCommand {
  CommandKind kind;
  Addressing address = Broadcast{};

  bool operator==(const DownlinkCommand& o) const;
};

inline bool operator==(const Retransmit& a, const Retransmit& b) { return a.seq == b.seq; }
inline bool operator==(const Hop& a, const Hop& b) { return a.channel == b.channel; }
inline bool operator==(const Rate& a, const Rate& b) { return a.sf == b.sf && a.k_bits == b.k_bits; }
inline bool operator==(const SensorCtl& a, const SensorCtl& b) { return a.on == b.on; }
inline bool operator==(const Ack&, const Ack&) { return true; }
inline bool operator==(const Unicast& a, const Unicast& b) { return a.tag == b.tag; }
inline bool operator==(const Multicast& a, const Multicast& b) { return a.tags == b.tags; }
inline bool operator==(const Broadcast&, const Broadcast&) { return true; }

inline bool DownlinkCommand::operator==(const DownlinkCommand& o) const {
  return kind == o.kind && address == o.address;
}

struct TagState {
  std::uint32_t id = 0;
  std::uint32_t channel = 0;
  int sf = 7;
  int k_bits = 2;
  int slot_counter = 0;
  std::deque<std::uint32_t> pending;
  bool sensor_on = true;
  std::uint64_t rng_seed = 0;
};

struct TagAction {
  std::uint32_t tag;
  std::string action;
};

// Applies `cmd` to every addressed tag. Unicast to an id that is not
// present throws AddressingError; multicast ids that are absent are skipped.
inline std::vector<TagAction> dispatch_downlink(const DownlinkCommand& cmd,
                                                std::vector<TagState>& tags) {
  std::vector<TagState*> targets;
  if (const auto* u = std::get_if<Unicast>(&cmd.address)) {
    for (auto& t : tags)
      if (t.id == u->tag) targets.push_back(&t);
    if (targets.empty()) throw AddressingError("unicast to unknown tag " + std::to_string(u->tag));
  } else if (const auto* m = std::get_if<Multicast>(&cmd.address)) {
    for (auto& t : tags)
      if (std::find(m->tags.begin(), m->tags.end(), t.id) != m->tags.end()) targets.push_back(&t);
  } else {
    for (auto& t : tags) targets.push_back(&t);
  }

  std::vector<TagAction> actions;
  for (TagState* t : targets) {
    std::string what = std::visit(
        [&](const auto& k) -> std::string {
          using K = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<K, Retransmit>) {
            t->pending.push_back(k.seq);
            return "retransmit " + std::to_string(k.seq);
          } else if constexpr (std::is_same_v<K, Hop>) {
            t->channel = k.channel;
            return "hop " + std::to_string(k.channel);
          } else if constexpr (std::is_same_v<K, Rate>) {
            SymbolParams::make(k.sf, 500e3, k.k_bits);  // range check
            t->sf = k.sf;
            t->k_bits = k.k_bits;
            return "rate sf" + std::to_string(k.sf) + " k" + std::to_string(k.k_bits);
          } else if constexpr (std::is_same_v<K, SensorCtl>) {
            t->sensor_on = k.on;
            return k.on ? "sensor on" : "sensor off";
          } else {
            if (!t->pending.empty()) t->pending.pop_front();
            return "ack";
          }
        },
        cmd.kind);
    actions.push_back({t->id, std::move(what)});
  }
  return actions;
}

// Byte encoding: kind, argument words, address type, id count, ids.
// Words are 32-bit little endian.
namespace detail {

inline void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::optional<std::uint32_t> get_u32(const std::vector<std::uint8_t>& b, std::size_t& pos) {
  if (pos + 4 > b.size()) return std::nullopt;
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[pos + i]) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_command(const DownlinkCommand& cmd) {
  std::vector<std::uint8_t> b;
  b.push_back(static_cast<std::uint8_t>(cmd.kind.index()));
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, Retransmit>) detail::put_u32(b, k.seq);
        if constexpr (std::is_same_v<K, Hop>) detail::put_u32(b, k.channel);
        if constexpr (std::is_same_v<K, Rate>) {
          b.push_back(static_cast<std::uint8_t>(k.sf));
          b.push_back(static_cast<std::uint8_t>(k.k_bits));
        }
        if constexpr (std::is_same_v<K, SensorCtl>) b.push_back(k.on ? 1 : 0);
      },
      cmd.kind);
  b.push_back(static_cast<std::uint8_t>(cmd.address.index()));
  if (const auto* u = std::get_if<Unicast>(&cmd.address)) detail::put_u32(b, u->tag);
  if (const auto* m = std::get_if<Multicast>(&cmd.address)) {
    detail::put_u32(b, static_cast<std::uint32_t>(m->tags.size()));
    for (auto id : m->tags) detail::put_u32(b, id);
  }
  return b;
}

// nullopt for malformed input.
inline std::optional<DownlinkCommand> decode_command(const std::vector<std::uint8_t>& b) {
  std::size_t pos = 0;
  if (b.empty()) return std::nullopt;
  DownlinkCommand cmd{Ack{}};
  const auto kind = b[pos++];
  switch (kind) {
    case 0: {
      auto v = detail::get_u32(b, pos);
      if (!v) return std::nullopt;
      cmd.kind = Retransmit{*v};
      break;
    }
    case 1: {
      auto v = detail::get_u32(b, pos);
      if (!v) return std::nullopt;
      cmd.kind = Hop{*v};
      break;
    }
    case 2:
      if (pos + 2 > b.size()) return std::nullopt;
      cmd.kind = Rate{b[pos], b[pos + 1]};
      pos += 2;
      break;
    case 3:
      if (pos + 1 > b.size() || b[pos] > 1) return std::nullopt;
      cmd.kind = SensorCtl{b[pos++] == 1};
      break;
    case 4: cmd.kind = Ack{}; break;
    default: return std::nullopt;
  }
  if (pos >= b.size()) return std::nullopt;
  switch (b[pos++]) {
    case 0: {
      auto v = detail::get_u32(b, pos);
      if (!v) return std::nullopt;
      cmd.address = Unicast{*v};
      break;
    }
    case 1: {
      auto n = detail::get_u32(b, pos);
      if (!n || *n > (b.size() - pos) / 4) return std::nullopt;
      Multicast m;
      for (std::uint32_t i = 0; i < *n; ++i) m.tags.push_back(*detail::get_u32(b, pos));
      cmd.address = std::move(m);
      break;
    }
    case 2: cmd.address = Broadcast{}; break;
    default: return std::nullopt;
  }
  if (pos != b.size()) return std::nullopt;
  return cmd;
}

// LSB-first packing of bytes into K-bit symbols (last symbol zero-padded).
inline std::vector<std::uint32_t> bytes_to_symbols(const std::vector<std::uint8_t>& bytes, int k_bits) {
  std::vector<std::uint32_t> out;
  std::uint32_t acc = 0;
  int have = 0;
  for (auto byte : bytes) {
    for (int i = 0; i < 8; ++i) {
      acc |= static_cast<std::uint32_t>((byte >> i) & 1u) << have;
      if (++have == k_bits) {
        out.push_back(acc);
        acc = 0;
        have = 0;
      }
    }
  }
  if (have > 0) out.push_back(acc);
  return out;
}

inline std::vector<std::uint8_t> symbols_to_bytes(const std::vector<std::uint32_t>& syms, int k_bits,
                                                  std::size_t n_bytes) {
  std::vector<std::uint8_t> out(n_bytes, 0);
  std::size_t bit = 0;
  for (auto s : syms) {
    for (int i = 0; i < k_bits; ++i, ++bit) {
      if (bit / 8 >= n_bytes) return out;
      if ((s >> i) & 1u) out[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
    }
  }
  return out;
}

struct AlohaRound {
  std::vector<int> slot_of_tag;     // 0-based slot each tag transmitted in
  std::vector<int> occupancy;       // tags per slot
  std::vector<bool> success;        // per tag
};

// One round: each tag draws a counter in [1, n_slots]; the AP sends a carrier
// per slot, every waiting tag decrements on it and transmits at zero.
inline AlohaRound slotted_aloha_round(int n_tags, int n_slots, Rng& rng) {
  if (n_tags < 1 || n_slots < 1) throw ConfigError("ALOHA needs at least one tag and one slot");
  std::uniform_int_distribution<int> pick(1, n_slots);
  std::vector<TagState> tags(static_cast<std::size_t>(n_tags));
  for (auto& t : tags) t.slot_counter = pick(rng);

  AlohaRound r;
  r.slot_of_tag.assign(tags.size(), -1);
  r.occupancy.assign(static_cast<std::size_t>(n_slots), 0);
  for (int slot = 0; slot < n_slots; ++slot) {
    for (std::size_t i = 0; i < tags.size(); ++i) {
      if (tags[i].slot_counter == 0) continue;
      if (--tags[i].slot_counter == 0) {
        r.slot_of_tag[i] = slot;
        ++r.occupancy[static_cast<std::size_t>(slot)];
      }
    }
  }
  r.success.resize(tags.size());
  for (std::size_t i = 0; i < tags.size(); ++i)
    r.success[i] = r.occupancy[static_cast<std::size_t>(r.slot_of_tag[i])] == 1;
  return r;
}

inline AlohaRound slotted_aloha_round(int n_tags, int n_slots, std::uint64_t rng_seed) {
  Rng rng = make_rng(rng_seed, SeedStream::Mac);
  return slotted_aloha_round(n_tags, n_slots, rng);
}

struct AlohaStats {
  double per_tag_success;   // successes / (rounds * n_tags)
  double all_success;       // fraction of rounds where every tag succeeded
};

inline AlohaStats aloha_stats(int n_tags, int n_slots, std::size_t rounds, std::uint64_t seed) {
  Rng rng = make_rng(seed, SeedStream::Mac);
  std::size_t ok = 0, all = 0;
  for (std::size_t r = 0; r < rounds; ++r) {
    const auto round = slotted_aloha_round(n_tags, n_slots, rng);
    const auto s = static_cast<std::size_t>(std::count(round.success.begin(), round.success.end(), true));
    ok += s;
    if (s == static_cast<std::size_t>(n_tags)) ++all;
  }
  return {static_cast<double>(ok) / (static_cast<double>(rounds) * n_tags),
          static_cast<double>(all) / static_cast<double>(rounds)};
}

// Downlink delivery: a decoded command, or nullopt when the tag missed it.
using DownlinkChannel = std::function<std::optional<DownlinkCommand>(const DownlinkCommand&, std::uint64_t seed)>;

// Downlink that succeeds with a fixed probability.
inline DownlinkChannel abstract_downlink(double p_success) {
  if (!(p_success >= 0 && p_success <= 1)) throw ConfigError("downlink probability outside [0, 1]");
  return [p_success](const DownlinkCommand& cmd, std::uint64_t seed) -> std::optional<DownlinkCommand> {
    Rng rng = make_rng(seed, SeedStream::Mac);
    if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p_success) return cmd;
    return std::nullopt;
  };
}

struct LinkModel {
  double uplink_success_prob = 1.0;
  DownlinkChannel downlink = abstract_downlink(1.0);

  void validate() const {
    if (!(uplink_success_prob >= 0 && uplink_success_prob <= 1))
      throw ConfigError("uplink success probability outside [0, 1]");
  }
};

// Each packet gets up to 1 + max_retx independent attempts.
inline double feedback_retransmit(const LinkModel& link, int max_retx, std::size_t n_packets,
                                  std::uint64_t rng_seed) {
  link.validate();
  if (max_retx < 0) throw ConfigError("max_retx must be nonnegative");
  if (n_packets == 0) return 0.0;
  Rng rng = make_rng(rng_seed, SeedStream::Mac);
  std::bernoulli_distribution attempt(link.uplink_success_prob);
  std::size_t delivered = 0;
  for (std::size_t i = 0; i < n_packets; ++i) {
    for (int a = 0; a <= max_retx; ++a) {
      if (attempt(rng)) {
        ++delivered;
        break;
      }
    }
  }
  return static_cast<double>(delivered) / static_cast<double>(n_packets);
}

struct HopResult {
  double prr_before = 0;
  double prr_after = 0;
  double median_before = 0;
  double median_after = 0;
  std::vector<double> windows_before;  // sorted per-window PRR (the CDF support)
  std::vector<double> windows_after;
  bool hop_delivered = false;
};

inline double median_of_sorted(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// n_packets uplink packets on the jammed link, then the Hop command over the
// downlink of `jammed`, then n_packets more on the clean link if the tag
// decoded the hop (otherwise still on the jammed one).
inline HopResult channel_hop_sim(const LinkModel& jammed, const LinkModel& clean,
                                 const DownlinkCommand& hop_trigger, std::size_t n_packets,
                                 std::uint64_t rng_seed, std::size_t window = 100) {
  if (!std::holds_alternative<Hop>(hop_trigger.kind)) throw ConfigError("hop trigger must be a Hop command");
  if (window == 0) throw ConfigError("window must be positive");
  jammed.validate();
  clean.validate();
  Rng rng = make_rng(rng_seed, SeedStream::Mac);

  auto run = [&](double p, std::vector<double>& windows) {
    std::bernoulli_distribution ok(p);
    std::size_t total = 0, in_window = 0, count = 0;
    for (std::size_t i = 0; i < n_packets; ++i) {
      const bool s = ok(rng);
      total += s;
      in_window += s;
      if (++count == window) {
        windows.push_back(static_cast<double>(in_window) / static_cast<double>(window));
        in_window = count = 0;
      }
    }
    std::sort(windows.begin(), windows.end());
    return n_packets ? static_cast<double>(total) / static_cast<double>(n_packets) : 0.0;
  };

  HopResult r;
  r.prr_before = run(jammed.uplink_success_prob, r.windows_before);
  const auto got = jammed.downlink(hop_trigger, mix_seed(rng_seed ^ 0x4f1bbcdcbfa53e0bULL));
  r.hop_delivered = got.has_value() && *got == hop_trigger;
  r.prr_after = run(r.hop_delivered ? clean.uplink_success_prob : jammed.uplink_success_prob,
                    r.windows_after);
  r.median_before = median_of_sorted(r.windows_before);
  r.median_after = median_of_sorted(r.windows_after);
  return r;
}

struct RateEntry {
  double snr_threshold_db;
  int sf;
  int k_bits;
};

inline double entry_rate(const RateEntry& e, double bw = 500e3) {
  return e.k_bits * bw / std::ldexp(1.0, e.sf);
}

inline std::vector<RateEntry> default_rate_policy() {
  return {{-5.0, 12, 1}, {0.0, 11, 1}, {3.0, 10, 2}, {6.0, 9, 2},
          {9.0, 8, 3},   {12.0, 7, 4}, {15.0, 7, 5}};
}

// Highest-rate entry whose threshold is at or below `snr_db`; the slowest
// entry when none qualifies.
inline std::pair<int, int> rate_adapt(double snr_db, const std::vector<RateEntry>& policy) {
  if (policy.empty()) throw ConfigError("empty rate policy");
  std::vector<RateEntry> sorted = policy;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.snr_threshold_db < b.snr_threshold_db; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].sf > sorted[i - 1].sf || sorted[i].k_bits < sorted[i - 1].k_bits)
      throw ConfigError("rate policy must not lower the rate as SNR grows");
  }
  const RateEntry* best = nullptr;
  for (const auto& e : sorted)
    if (e.snr_threshold_db <= snr_db && (!best || entry_rate(e) >= entry_rate(*best))) best = &e;
  if (!best) {
    best = &sorted.front();
    for (const auto& e : sorted)
      if (entry_rate(e) < entry_rate(*best)) best = &e;
  }
  return {best->sf, best->k_bits};
}

}  // namespace saiyan::mac
