#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sentifuse/dates.hpp"

namespace sentifuse::ingest {

enum class Platform { Twitter, Reddit };
enum class Category { Executive, General, Unassigned };

/// One trading day of OHLCV data.
struct DailyBar {
    Date date;
    double open = 0;
    double high = 0;
    double low = 0;
    double close = 0;
    std::int64_t volume = 0;

    bool operator==(const DailyBar&) const = default;
};

struct PostRecord {
    std::string id;
    Date date;
    std::string author;
    std::string text;
    Platform platform = Platform::Twitter;
    Category category = Category::Unassigned;
    std::optional<std::int64_t> upvotes;
};

/// Curated executive author handles, lowercased.
struct HandleList {
    std::set<std::string> handles;

    /// Plain text, one handle per line; `#`-prefixed lines are comments.
    static HandleList load(const std::string& path);
    static HandleList from_lines(const std::vector<std::string>& lines);

    bool contains(const std::string& lowercase_handle) const {
        return handles.count(lowercase_handle) > 0;
    }
};

/// Yahoo-layout CSV: header `Date,Open,High,Low,Close,Adj Close,Volume`.
/// The Adj Close column is read and discarded. Output is sorted by date;
/// rows violating bar invariants raise ValidationError naming date and field.
std::vector<DailyBar> parse_ohlcv(const std::string& path);
std::vector<DailyBar> parse_ohlcv_text(const std::string& text,
                                       const std::string& origin);

/// Inverse of parse_ohlcv; Adj Close is written equal to close.
std::string serialize_ohlcv(const std::vector<DailyBar>& bars);

/// JSONL, one object per line with keys id, date, user, text, platform and
/// optional subreddit, upvotes. Timestamps are truncated to calendar days.
std::vector<PostRecord> parse_posts(const std::string& path);
std::vector<PostRecord> parse_posts_text(const std::string& text,
                                         const std::string& origin);

std::string serialize_posts(const std::vector<PostRecord>& posts);

/// For each (author, trimmed text) pair keeps only the earliest-dated
/// occurrence (first in file order on ties); relative order preserved.
std::vector<PostRecord> dedup_posts(const std::vector<PostRecord>& posts);

struct Partition {
    std::vector<PostRecord> executive;
    std::vector<PostRecord> general;
};

/// Splits posts by executive handle (case-insensitive). When sample_size is
/// given and the general side exceeds it, draws a uniform sample without
/// replacement of exactly sample_size general posts, seeded; executives are
/// never sampled.
Partition partition_posts(const std::vector<PostRecord>& posts,
                          const HandleList& executives,
                          std::optional<std::size_t> sample_size,
                          std::uint64_t seed);

} // namespace sentifuse::ingest
