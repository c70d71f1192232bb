#include "ppm/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "cache and checkpoint formats assume a little-endian host");

namespace ppm::features {

using eventlog::EventLog;
using eventlog::Trace;
using eventlog::Vocabulary;

TaskTargets compute_targets(const Trace& trace, int k) {
    int n = static_cast<int>(trace.events.size());
    if (k < 1 || k >= n)
        throw InternalError("compute_targets: k=" + std::to_string(k) + " outside [1," +
                            std::to_string(n - 1) + "]");
    const auto& next = trace.events[k];      // e_{k+1}
    const auto& cur = trace.events[k - 1];   // e_k
    const auto& last = trace.events[n - 1];  // e_n
    TaskTargets t;
    t.activity = next.activity;
    t.role = next.role;
    t.duration = next.end - next.start;
    t.waiting = next.start - cur.end;
    t.remaining = last.end - cur.end;
    return t;
}

Trace add_boundary_events(const Trace& trace) {
    if (trace.events.empty()) throw InternalError("add_boundary_events: empty trace");
    Trace out;
    out.case_id = trace.case_id;
    out.events.reserve(trace.events.size() + 2);
    const auto& first = trace.events.front();
    const auto& last = trace.events.back();
    out.events.push_back({trace.case_id, Vocabulary::kStart, Vocabulary::kStart, first.start, first.start});
    out.events.insert(out.events.end(), trace.events.begin(), trace.events.end());
    out.events.push_back({trace.case_id, Vocabulary::kEnd, Vocabulary::kEnd, last.end, last.end});
    return out;
}

EventLog augment_with_boundaries(const EventLog& log) {
    EventLog out;
    out.activity_vocab = log.activity_vocab;
    out.role_vocab = log.role_vocab;
    out.traces.reserve(log.traces.size());
    for (const auto& t : log.traces) out.traces.push_back(add_boundary_events(t));
    return out;
}

std::vector<TimeFeatures> compute_time_features(const Trace& trace, long* clamped) {
    std::vector<TimeFeatures> out(trace.events.size());
    double last_end = trace.events.back().end;
    long clamps = 0;
    for (std::size_t i = 0; i < trace.events.size(); ++i) {
        const auto& e = trace.events[i];
        out[i].duration = e.end - e.start;
        if (i == 0) {
            out[i].waiting = 0.0;
        } else {
            double w = e.start - trace.events[i - 1].end;
            if (w < 0.0) {
                w = 0.0;
                ++clamps;
            }
            out[i].waiting = w;
        }
        out[i].remaining = last_end - e.end;
    }
    if (clamped) *clamped += clamps;
    return out;
}

Normalizer fit_normalizer(const EventLog& train) {
    std::size_t n = train.total_events();
    if (n == 0) throw EmptyLog();

    double sum[3] = {0, 0, 0};
    std::vector<std::array<double, 3>> feats;
    feats.reserve(n);
    for (const auto& t : train.traces) {
        auto tf = compute_time_features(t);
        for (const auto& f : tf) {
            feats.push_back({f.duration, f.waiting, f.remaining});
            sum[0] += f.duration;
            sum[1] += f.waiting;
            sum[2] += f.remaining;
        }
    }
    double mean[3], var[3] = {0, 0, 0};
    for (int c = 0; c < 3; ++c) mean[c] = sum[c] / n;
    for (const auto& f : feats)
        for (int c = 0; c < 3; ++c) var[c] += (f[c] - mean[c]) * (f[c] - mean[c]);

    Normalizer norm;
    Normalizer::Stat* stats[3] = {&norm.duration, &norm.waiting, &norm.remaining};
    for (int c = 0; c < 3; ++c) {
        stats[c]->mean = mean[c];
        double s = std::sqrt(var[c] / n);  // population
        stats[c]->stddev = s < 1e-12 ? 1.0 : s;
    }
    return norm;
}

int compute_max_len(const EventLog& augmented_train) {
    std::size_t longest = 0;
    for (const auto& t : augmented_train.traces) longest = std::max(longest, t.events.size());
    if (longest < 2) throw EmptyLog();
    return static_cast<int>(longest) - 1;
}

namespace {

std::vector<Sample> build_samples(const EventLog& log, const Normalizer& norm, int width,
                                  bool count_truncation, BuildStats* stats, TimeChannel channel) {
    if (width < 1) throw InternalError("sample width must be >= 1");

    std::size_t n_traces = log.traces.size();
    std::vector<std::size_t> offset(n_traces + 1, 0);
    for (std::size_t i = 0; i < n_traces; ++i) {
        std::size_t n = log.traces[i].events.size();
        offset[i + 1] = offset[i] + (n >= 2 ? n - 1 : 0);
    }

    std::vector<Sample> out(offset[n_traces]);
    std::vector<long> clamps(n_traces, 0), truncs(n_traces, 0);
    const auto& act_vocab = *log.activity_vocab;
    const auto& role_vocab = *log.role_vocab;

#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t ti = 0; ti < static_cast<std::ptrdiff_t>(n_traces); ++ti) {
        const Trace& trace = log.traces[ti];
        int n = static_cast<int>(trace.events.size());
        if (n < 2) continue;
        auto tf = compute_time_features(trace, &clamps[ti]);

        std::vector<int> act_idx(n), role_idx(n);
        std::vector<std::array<double, 3>> tfeat(n);
        for (int i = 0; i < n; ++i) {
            act_idx[i] = act_vocab.index_of(trace.events[i].activity);
            role_idx[i] = role_vocab.index_of(trace.events[i].role);
            tfeat[i] = {norm.duration.apply(tf[i].duration), norm.waiting.apply(tf[i].waiting),
                        channel == TimeChannel::causal ? 0.0 : norm.remaining.apply(tf[i].remaining)};
        }

        for (int k = 1; k <= n - 1; ++k) {
            Sample& s = out[offset[ti] + (k - 1)];
            s.case_id = trace.case_id;
            s.k = k;
            int valid = std::min(k, width);
            s.valid_len = valid;
            if (count_truncation && k > width) ++truncs[ti];

            s.activity_prefix.assign(width, Vocabulary::pad_index);
            s.role_prefix.assign(width, Vocabulary::pad_index);
            s.time_prefix.assign(width, {0.0, 0.0, 0.0});
            for (int j = 0; j < valid; ++j) {
                int ev = k - valid + j;
                int pos = width - valid + j;
                s.activity_prefix[pos] = act_idx[ev];
                s.role_prefix[pos] = role_idx[ev];
                s.time_prefix[pos] = tfeat[ev];
            }

            s.target_activity = act_idx[k];
            s.target_role = role_idx[k];
            s.target_times = {norm.waiting.apply(tf[k].waiting), norm.duration.apply(tf[k].duration),
                              norm.remaining.apply(tf[k - 1].remaining)};
        }
    }

    if (stats) {
        for (std::size_t i = 0; i < n_traces; ++i) {
            stats->clamped_waits += clamps[i];
            stats->truncated_prefixes += truncs[i];
        }
    }
    return out;
}

}  // namespace

std::vector<Sample> build_prefix_samples(const EventLog& augmented_log, const Normalizer& norm,
                                         int max_len, BuildStats* stats, TimeChannel channel) {
    return build_samples(augmented_log, norm, max_len, /*count_truncation=*/true, stats, channel);
}

std::vector<Sample> build_ngram_samples(const EventLog& augmented_log, const Normalizer& norm, int g,
                                        BuildStats* stats, TimeChannel channel) {
    return build_samples(augmented_log, norm, g, /*count_truncation=*/false, stats, channel);
}

// ---- cache ----------------------------------------------------------------

namespace {

constexpr char kCacheMagic[8] = {'P', 'P', 'M', 'S', 'M', 'P', '1', '\n'};

template <typename T>
void write_raw(std::ofstream& out, const T* data, std::size_t count) {
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
}

template <typename T>
void read_raw(std::ifstream& in, T* data, std::size_t count) {
    in.read(reinterpret_cast<char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
    if (!in) throw DataError("sample cache: truncated file");
}

void write_split(std::ofstream& out, const std::vector<Sample>& samples, int width) {
    for (const auto& s : samples) {
        std::uint32_t len = static_cast<std::uint32_t>(s.case_id.size());
        write_raw(out, &len, 1);
        out.write(s.case_id.data(), len);
    }
    std::vector<std::int32_t> ints;
    ints.reserve(samples.size());
    auto dump_ints = [&](auto getter) {
        ints.clear();
        for (const auto& s : samples) ints.push_back(getter(s));
        write_raw(out, ints.data(), ints.size());
    };
    dump_ints([](const Sample& s) { return s.k; });
    dump_ints([](const Sample& s) { return s.valid_len; });
    dump_ints([](const Sample& s) { return s.target_activity; });
    dump_ints([](const Sample& s) { return s.target_role; });
    for (const auto& s : samples) {
        std::vector<std::int32_t> row(s.activity_prefix.begin(), s.activity_prefix.end());
        write_raw(out, row.data(), row.size());
    }
    for (const auto& s : samples) {
        std::vector<std::int32_t> row(s.role_prefix.begin(), s.role_prefix.end());
        write_raw(out, row.data(), row.size());
    }
    for (const auto& s : samples)
        for (int p = 0; p < width; ++p) write_raw(out, s.time_prefix[p].data(), 3);
    for (const auto& s : samples) write_raw(out, s.target_times.data(), 3);
}

std::vector<Sample> read_split(std::ifstream& in, std::size_t count, int width) {
    std::vector<Sample> samples(count);
    for (auto& s : samples) {
        std::uint32_t len = 0;
        read_raw(in, &len, 1);
        s.case_id.resize(len);
        in.read(s.case_id.data(), len);
        if (!in) throw DataError("sample cache: truncated file");
    }
    std::vector<std::int32_t> ints(count);
    auto load_ints = [&](auto setter) {
        read_raw(in, ints.data(), count);
        for (std::size_t i = 0; i < count; ++i) setter(samples[i], ints[i]);
    };
    load_ints([](Sample& s, std::int32_t v) { s.k = v; });
    load_ints([](Sample& s, std::int32_t v) { s.valid_len = v; });
    load_ints([](Sample& s, std::int32_t v) { s.target_activity = v; });
    load_ints([](Sample& s, std::int32_t v) { s.target_role = v; });
    std::vector<std::int32_t> row(width);
    for (auto& s : samples) {
        read_raw(in, row.data(), width);
        s.activity_prefix.assign(row.begin(), row.end());
    }
    for (auto& s : samples) {
        read_raw(in, row.data(), width);
        s.role_prefix.assign(row.begin(), row.end());
    }
    for (auto& s : samples) {
        s.time_prefix.resize(width);
        for (int p = 0; p < width; ++p) read_raw(in, s.time_prefix[p].data(), 3);
    }
    for (auto& s : samples) read_raw(in, s.target_times.data(), 3);
    return samples;
}

nlohmann::json stat_to_json(const Normalizer::Stat& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}};
}

Normalizer::Stat stat_from_json(const nlohmann::json& j) {
    return {j.at("mean").get<double>(), j.at("stddev").get<double>()};
}

}  // namespace

nlohmann::json normalizer_to_json(const Normalizer& norm) {
    return {{"duration", stat_to_json(norm.duration)},
            {"waiting", stat_to_json(norm.waiting)},
            {"remaining", stat_to_json(norm.remaining)}};
}

Normalizer normalizer_from_json(const nlohmann::json& j) {
    Normalizer n;
    n.duration = stat_from_json(j.at("duration"));
    n.waiting = stat_from_json(j.at("waiting"));
    n.remaining = stat_from_json(j.at("remaining"));
    return n;
}

void save_sample_cache(const std::string& path, const SampleCache& cache) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);

    nlohmann::json header{
        {"mode", cache.mode},
        {"width", cache.width},
        {"time_channel", cache.channel == TimeChannel::full ? "full" : "causal"},
        {"normalizer",
         {{"duration", stat_to_json(cache.norm.duration)},
          {"waiting", stat_to_json(cache.norm.waiting)},
          {"remaining", stat_to_json(cache.norm.remaining)}}},
        {"dataset", cache.dataset},
        {"activity_labels", cache.activity_labels},
        {"role_labels", cache.role_labels},
        {"activity_vocab_hash", cache.activity_vocab_hash},
        {"role_vocab_hash", cache.role_vocab_hash},
        {"activity_vocab_size", cache.activity_vocab_size},
        {"role_vocab_size", cache.role_vocab_size},
        {"counts", {cache.train.size(), cache.validation.size(), cache.test.size()}},
    };
    std::string hs = header.dump();
    out.write(kCacheMagic, 8);
    std::uint32_t len = static_cast<std::uint32_t>(hs.size());
    write_raw(out, &len, 1);
    out.write(hs.data(), len);
    write_split(out, cache.train, cache.width);
    write_split(out, cache.validation, cache.width);
    write_split(out, cache.test, cache.width);
}

SampleCache load_sample_cache(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    char magic[8];
    read_raw(in, magic, 8);
    if (std::memcmp(magic, kCacheMagic, 8) != 0) throw DataError("not a sample cache: " + path);
    std::uint32_t len = 0;
    read_raw(in, &len, 1);
    std::string hs(len, '\0');
    in.read(hs.data(), len);
    if (!in) throw DataError("sample cache: truncated header");
    nlohmann::json header = nlohmann::json::parse(hs);

    SampleCache cache;
    cache.mode = header.at("mode").get<std::string>();
    cache.width = header.at("width").get<int>();
    cache.channel =
        header.at("time_channel").get<std::string>() == "causal" ? TimeChannel::causal : TimeChannel::full;
    cache.norm.duration = stat_from_json(header.at("normalizer").at("duration"));
    cache.norm.waiting = stat_from_json(header.at("normalizer").at("waiting"));
    cache.norm.remaining = stat_from_json(header.at("normalizer").at("remaining"));
    cache.dataset = header.value("dataset", "");
    cache.activity_labels = header.at("activity_labels").get<std::vector<std::string>>();
    cache.role_labels = header.at("role_labels").get<std::vector<std::string>>();
    cache.activity_vocab_hash = header.at("activity_vocab_hash").get<std::string>();
    cache.role_vocab_hash = header.at("role_vocab_hash").get<std::string>();
    cache.activity_vocab_size = header.at("activity_vocab_size").get<int>();
    cache.role_vocab_size = header.at("role_vocab_size").get<int>();
    auto counts = header.at("counts");
    cache.train = read_split(in, counts.at(0).get<std::size_t>(), cache.width);
    cache.validation = read_split(in, counts.at(1).get<std::size_t>(), cache.width);
    cache.test = read_split(in, counts.at(2).get<std::size_t>(), cache.width);
    return cache;
}

}  // namespace ppm::features
