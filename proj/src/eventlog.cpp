#include "ppm/eventlog.hpp"

#include "ppm/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ppm::eventlog {

// ---- Vocabulary ----------------------------------------------------------

Vocabulary Vocabulary::with_reserved() {
    Vocabulary v;
    v.labels_ = {kPad, kStart, kEnd, kUnk};
    for (int i = 0; i < 4; ++i) v.index_.emplace(v.labels_[i], i);
    return v;
}

Vocabulary Vocabulary::from_labels(const std::vector<std::string>& labels) {
    if (labels.size() < 4 || labels[0] != kPad || labels[1] != kStart || labels[2] != kEnd ||
        labels[3] != kUnk)
        throw DataError("vocabulary labels must begin with the four reserved entries");
    Vocabulary v = with_reserved();
    for (std::size_t i = 4; i < labels.size(); ++i) v.add(labels[i]);
    if (v.size() != static_cast<int>(labels.size()))
        throw DataError("vocabulary labels contain duplicates");
    return v;
}

bool Vocabulary::is_reserved(const std::string& label) {
    return label == kPad || label == kStart || label == kEnd || label == kUnk;
}

int Vocabulary::add(const std::string& label) {
    auto it = index_.find(label);
    if (it != index_.end()) return it->second;
    int idx = static_cast<int>(labels_.size());
    labels_.push_back(label);
    index_.emplace(label, idx);
    return idx;
}

int Vocabulary::index_of(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? unk_index : it->second;
}

const std::string& Vocabulary::label_of(int index) const {
    if (index < 0 || index >= size())
        throw InternalError("Vocabulary: index " + std::to_string(index) + " out of range");
    return labels_[index];
}

bool Vocabulary::contains(const std::string& label) const { return index_.count(label) != 0; }

std::string Vocabulary::hash() const {
    std::uint64_t h = 14695981039346656037ULL;
    auto mix = [&h](unsigned char c) {
        h ^= c;
        h *= 1099511628211ULL;
    };
    for (const auto& l : labels_) {
        for (unsigned char c : l) mix(c);
        mix(0);
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- timestamps -----------------------------------------------------------

namespace {

// Howard Hinnant's days-from-civil; proleptic Gregorian, no locale, no TZ db.
long long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    long long era = (y >= 0 ? y : y - 399) / 400;
    unsigned yoe = static_cast<unsigned>(y - era * 400);
    unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long long>(doe) - 719468;
}

bool all_digits(const std::string& s, std::size_t from, std::size_t n) {
    if (from + n > s.size()) return false;
    for (std::size_t i = from; i < from + n; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

int to_int(const std::string& s, std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) v = v * 10 + (s[i] - '0');
    return v;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<double> parse_timestamp(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) return std::nullopt;

    // plain numeric seconds
    {
        const char* begin = s.data();
        const char* end = s.data() + s.size();
        double v = 0.0;
        auto res = std::from_chars(begin, end, v);
        if (res.ec == std::errc() && res.ptr == end) return v;
    }

    // YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|±HH[:MM]|±HHMM]
    if (s.size() < 19) return std::nullopt;
    if (!all_digits(s, 0, 4) || s[4] != '-' || !all_digits(s, 5, 2) || s[7] != '-' ||
        !all_digits(s, 8, 2))
        return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (!all_digits(s, 11, 2) || s[13] != ':' || !all_digits(s, 14, 2) || s[16] != ':' ||
        !all_digits(s, 17, 2))
        return std::nullopt;

    int year = to_int(s, 0, 4), month = to_int(s, 5, 2), day = to_int(s, 8, 2);
    int hh = to_int(s, 11, 2), mm = to_int(s, 14, 2), ss = to_int(s, 17, 2);
    if (month < 1 || month > 12 || day < 1 || day > 31 || hh > 23 || mm > 59 || ss > 60)
        return std::nullopt;

    std::size_t pos = 19;
    double frac = 0.0;
    if (pos < s.size() && s[pos] == '.') {
        std::size_t fs = ++pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos == fs) return std::nullopt;
        frac = std::strtod(("0." + s.substr(fs, pos - fs)).c_str(), nullptr);
    }

    double offset = 0.0;
    if (pos < s.size()) {
        char c = s[pos];
        if (c == 'Z' && pos + 1 == s.size()) {
            // UTC marker
        } else if (c == '+' || c == '-') {
            ++pos;
            if (!all_digits(s, pos, 2)) return std::nullopt;
            int oh = to_int(s, pos, 2);
            pos += 2;
            int om = 0;
            if (pos < s.size()) {
                if (s[pos] == ':') ++pos;
                if (!all_digits(s, pos, 2)) return std::nullopt;
                om = to_int(s, pos, 2);
                pos += 2;
            }
            if (pos != s.size()) return std::nullopt;
            offset = (c == '+' ? 1.0 : -1.0) * (oh * 3600.0 + om * 60.0);
        } else {
            return std::nullopt;
        }
    }

    double base = static_cast<double>(days_from_civil(year, month, day)) * 86400.0;
    return base + hh * 3600.0 + mm * 60.0 + ss + frac - offset;
}

// ---- CSV ------------------------------------------------------------------

namespace {

// RFC-4180-ish: quoted fields may contain commas, newlines and doubled quotes.
std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    std::vector<std::vector<std::string>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;

    auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(fields));
        fields.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < data.size(); ++i) {
        char c = data[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < data.size() && data[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_has_content || !field.empty() || !fields.empty()) end_record();
                break;
            default:
                field += c;
                row_has_content = true;
                break;
        }
    }
    if (row_has_content || !field.empty() || !fields.empty()) end_record();
    return records;
}

}  // namespace

EventLog parse_csv(const std::string& path, const ColumnMap& columns, ParseReport* report) {
    auto records = read_csv_records(path);
    if (records.empty()) throw EmptyLog();

    const auto& header = records[0];
    auto find_col = [&header](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<int>(i);
        throw MissingColumn(name);
    };
    int c_case = find_col(columns.case_id);
    int c_act = find_col(columns.activity);
    int c_role = find_col(columns.role);
    int c_start = find_col(columns.start);
    int c_end = find_col(columns.end);
    int max_col = std::max({c_case, c_act, c_role, c_start, c_end});

    auto act_vocab = std::make_shared<Vocabulary>(Vocabulary::with_reserved());
    auto role_vocab = std::make_shared<Vocabulary>(Vocabulary::with_reserved());

    EventLog log;
    std::unordered_map<std::string, std::size_t> trace_of_case;
    ParseReport rep;

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& row = records[r];
        ++rep.rows;
        if (static_cast<int>(row.size()) <= max_col)
            throw DataError("row " + std::to_string(r + 1) + ": expected at least " +
                            std::to_string(max_col + 1) + " columns, got " + std::to_string(row.size()));

        Event e;
        e.case_id = trim(row[c_case]);
        e.activity = trim(row[c_act]);
        e.role = trim(row[c_role]);
        if (e.activity.empty() || e.role.empty())
            throw DataError("row " + std::to_string(r + 1) + ": empty activity or role label");
        if (Vocabulary::is_reserved(e.activity) || Vocabulary::is_reserved(e.role))
            throw DataError("row " + std::to_string(r + 1) + ": reserved label in input");

        auto ts = parse_timestamp(row[c_start]);
        if (!ts) throw UnparseableTimestamp(r + 1, row[c_start]);
        auto te = parse_timestamp(row[c_end]);
        if (!te) throw UnparseableTimestamp(r + 1, row[c_end]);
        e.start = *ts;
        e.end = *te;
        if (e.end < e.start) {
            ++rep.dropped_negative_duration;
            continue;
        }

        auto [it, inserted] = trace_of_case.try_emplace(e.case_id, log.traces.size());
        if (inserted) log.traces.push_back(Trace{e.case_id, {}});
        log.traces[it->second].events.push_back(std::move(e));
        ++rep.events;
    }

    if (rep.events == 0) throw EmptyLog();

    for (auto& t : log.traces)
        std::stable_sort(t.events.begin(), t.events.end(), [](const Event& a, const Event& b) {
            return a.start != b.start ? a.start < b.start : a.end < b.end;
        });

    // vocabularies index labels in first-appearance order over the canonical
    // (grouped and sorted) log, so a written-out log re-parses to identical
    // indices
    for (const auto& t : log.traces)
        for (const auto& e : t.events) {
            act_vocab->add(e.activity);
            role_vocab->add(e.role);
        }

    log.activity_vocab = std::move(act_vocab);
    log.role_vocab = std::move(role_vocab);

    rep.traces = log.traces.size();
    rep.activities = log.activity_vocab->raw_label_count();
    rep.roles = log.role_vocab->raw_label_count();
    if (report) *report = rep;
    return log;
}

void write_csv(const EventLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << "case_id,activity,role,start_timestamp,end_timestamp\n";
    for (const auto& t : log.traces)
        for (const auto& e : t.events)
            out << text::csv_escape(e.case_id) << ',' << text::csv_escape(e.activity) << ',' << text::csv_escape(e.role)
                << ',' << text::format_double(e.start) << ',' << text::format_double(e.end) << '\n';
}

SplitLog split_chronological(const EventLog& log, const SplitFractions& fractions) {
    std::size_t n = log.traces.size();
    if (n < 3) throw TooFewTraces(n);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&log](std::size_t a, std::size_t b) {
        return log.traces[a].events.front().start < log.traces[b].events.front().start;
    });

    std::size_t n_train = static_cast<std::size_t>(std::floor(fractions.train * n));
    std::size_t n_val = static_cast<std::size_t>(std::floor(fractions.validation * n));

    SplitLog split;
    auto fill = [&](EventLog& part, std::size_t from, std::size_t to) {
        part.activity_vocab = log.activity_vocab;
        part.role_vocab = log.role_vocab;
        part.traces.reserve(to - from);
        for (std::size_t i = from; i < to; ++i) part.traces.push_back(log.traces[order[i]]);
    };
    fill(split.train, 0, n_train);
    fill(split.validation, n_train, n_train + n_val);
    fill(split.test, n_train + n_val, n);
    return split;
}

}  // namespace ppm::eventlog
