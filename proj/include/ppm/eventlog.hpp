#pragma once

#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ppm/errors.hpp"

namespace ppm::eventlog {

// Timestamps are seconds since the Unix epoch, UTC, as doubles so
// sub-second inputs survive. Activity and role are raw labels; encoding to
// indices happens in the feature pipeline via the log's vocabularies.
struct Event {
    std::string case_id;
    std::string activity;
    std::string role;
    double start = 0.0;
    double end = 0.0;
};

struct Trace {
    std::string case_id;
    std::vector<Event> events;
};

// Label <-> index bijection. Indices 0..3 are the reserved labels, real
// labels follow in first-appearance order.
class Vocabulary {
public:
    static constexpr const char* kPad = "«pad»";
    static constexpr const char* kStart = "«start»";
    static constexpr const char* kEnd = "«end»";
    static constexpr const char* kUnk = "«unk»";
    static constexpr int pad_index = 0;
    static constexpr int start_index = 1;
    static constexpr int end_index = 2;
    static constexpr int unk_index = 3;

    static Vocabulary with_reserved();
    // Rebuild from a serialized label list; the first four entries must be
    // the reserved labels in their fixed order.
    static Vocabulary from_labels(const std::vector<std::string>& labels);
    static bool is_reserved(const std::string& label);

    int add(const std::string& label);  // returns existing index if known
    // unk_index for labels outside the vocabulary
    int index_of(const std::string& label) const;
    const std::string& label_of(int index) const;
    bool contains(const std::string& label) const;
    int size() const { return static_cast<int>(labels_.size()); }
    const std::vector<std::string>& labels() const { return labels_; }
    int raw_label_count() const { return size() - 4; }

    // FNV-1a over labels in index order; used for cache staleness checks.
    std::string hash() const;

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

struct EventLog {
    std::vector<Trace> traces;
    std::shared_ptr<const Vocabulary> activity_vocab;
    std::shared_ptr<const Vocabulary> role_vocab;

    std::size_t total_events() const {
        std::size_t n = 0;
        for (const auto& t : traces) n += t.events.size();
        return n;
    }
};

struct ColumnMap {
    std::string case_id = "case_id";
    std::string activity = "activity";
    std::string role = "role";
    std::string start = "start_timestamp";
    std::string end = "end_timestamp";
};

struct ParseReport {
    std::size_t rows = 0;
    std::size_t events = 0;
    std::size_t traces = 0;
    std::size_t dropped_negative_duration = 0;
    int activities = 0;  // raw labels, reserved excluded
    int roles = 0;
};

// Accepted timestamp formats: ISO-8601 ("YYYY-MM-DDTHH:MM:SS" with optional
// fractional seconds and optional Z/+HH:MM/+HHMM offset), the same with a
// space separator, and plain numeric seconds since epoch.
std::optional<double> parse_timestamp(const std::string& text);

EventLog parse_csv(const std::string& path, const ColumnMap& columns, ParseReport* report = nullptr);

// Writes the canonical CSV form (numeric timestamps, shortest round-trip
// formatting); parse_csv(write_csv(log)) reproduces the log field-for-field.
void write_csv(const EventLog& log, const std::string& path);

struct SplitFractions {
    double train = 0.7;
    double validation = 0.1;
};

struct SplitLog {
    EventLog train;
    EventLog validation;
    EventLog test;
};

// Orders cases by their first event's start (ties by input order), then cuts
// floor(train*N) / floor(validation*N) / remainder. Vocabularies are shared
// with the input log.
SplitLog split_chronological(const EventLog& log, const SplitFractions& fractions = {});

}  // namespace ppm::eventlog
