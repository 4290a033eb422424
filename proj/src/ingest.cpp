#include "sentifuse/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

#include "sentifuse/errors.hpp"
#include "sentifuse/rng.hpp"
#include "sentifuse/textio.hpp"

namespace sentifuse::ingest {

namespace {

constexpr const char* kOhlcvHeader = "Date,Open,High,Low,Close,Adj Close,Volume";

double parse_price(const std::string& field, const std::string& origin,
                   std::size_t line_no, const char* name) {
    double value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(origin + ":" + std::to_string(line_no) +
                         ": cannot parse " + name + " '" + field + "'");
    return value;
}

std::int64_t parse_count(const std::string& field, const std::string& origin,
                         std::size_t line_no, const char* name) {
    std::int64_t value = 0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError(origin + ":" + std::to_string(line_no) +
                         ": cannot parse " + name + " '" + field + "'");
    return value;
}

void validate_bar(const DailyBar& bar) {
    const std::string day = bar.date.to_string();
    auto fail = [&](const char* field, const char* why) {
        throw ValidationError("bar " + day + ": " + field + " " + why);
    };
    if (!(bar.open > 0)) fail("open", "must be positive");
    if (!(bar.high > 0)) fail("high", "must be positive");
    if (!(bar.low > 0)) fail("low", "must be positive");
    if (!(bar.close > 0)) fail("close", "must be positive");
    if (bar.volume < 0) fail("volume", "must be non-negative");
    if (bar.low > std::min(bar.open, bar.close))
        fail("low", "exceeds min(open, close)");
    if (bar.high < std::max(bar.open, bar.close))
        fail("high", "is below max(open, close)");
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == '\n') {
            std::string line = text.substr(start, i - start);
            if (!line.empty() && line.back() == '\r') line.pop_back();
            lines.push_back(std::move(line));
            start = i + 1;
        }
    }
    // A trailing newline produces one empty tail entry; drop it.
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

} // namespace

HandleList HandleList::load(const std::string& path) {
    return from_lines(split_lines(textio::read_file(path)));
}

HandleList HandleList::from_lines(const std::vector<std::string>& lines) {
    HandleList list;
    for (const auto& raw : lines) {
        const std::string line = textio::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const std::string handle = textio::to_lower_ascii(line);
        if (handle.find_first_of(" \t") != std::string::npos)
            throw ValidationError("handle contains whitespace: '" + line + "'");
        list.handles.insert(handle);
    }
    if (list.handles.empty())
        throw ValidationError("handle list is empty");
    return list;
}

std::vector<DailyBar> parse_ohlcv(const std::string& path) {
    return parse_ohlcv_text(textio::read_file(path), path);
}

std::vector<DailyBar> parse_ohlcv_text(const std::string& text,
                                       const std::string& origin) {
    const auto lines = split_lines(text);
    if (lines.empty() || textio::trim(lines[0]) != kOhlcvHeader)
        throw FormatError(origin + ":1: expected header '" +
                          std::string(kOhlcvHeader) + "'");

    std::vector<DailyBar> bars;
    bars.reserve(lines.size());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (textio::trim(lines[i]).empty()) continue;
        const auto fields = textio::split(lines[i], ',');
        if (fields.size() != 7)
            throw FormatError(origin + ":" + std::to_string(i + 1) +
                              ": expected 7 columns, got " +
                              std::to_string(fields.size()));
        DailyBar bar;
        try {
            bar.date = Date::parse(fields[0]);
        } catch (const ParseError& e) {
            throw ParseError(origin + ":" + std::to_string(i + 1) + ": " +
                             e.what());
        }
        bar.open = parse_price(fields[1], origin, i + 1, "open");
        bar.high = parse_price(fields[2], origin, i + 1, "high");
        bar.low = parse_price(fields[3], origin, i + 1, "low");
        bar.close = parse_price(fields[4], origin, i + 1, "close");
        parse_price(fields[5], origin, i + 1, "adj close"); // read, discarded
        bar.volume = parse_count(fields[6], origin, i + 1, "volume");
        validate_bar(bar);
        bars.push_back(bar);
    }

    std::stable_sort(bars.begin(), bars.end(),
                     [](const DailyBar& a, const DailyBar& b) {
                         return a.date < b.date;
                     });
    for (std::size_t i = 1; i < bars.size(); ++i)
        if (bars[i].date == bars[i - 1].date)
            throw ValidationError(origin + ": duplicate date " +
                                  bars[i].date.to_string());
    return bars;
}

std::string serialize_ohlcv(const std::vector<DailyBar>& bars) {
    std::string out(kOhlcvHeader);
    out += '\n';
    char buf[160];
    for (const auto& bar : bars) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%lld\n",
                      bar.date.to_string().c_str(), bar.open, bar.high, bar.low,
                      bar.close, bar.close,
                      static_cast<long long>(bar.volume));
        out += buf;
    }
    return out;
}

std::vector<PostRecord> parse_posts(const std::string& path) {
    return parse_posts_text(textio::read_file(path), path);
}

std::vector<PostRecord> parse_posts_text(const std::string& text,
                                         const std::string& origin) {
    const auto lines = split_lines(text);
    std::vector<PostRecord> posts;
    posts.reserve(lines.size());
    std::unordered_set<std::string> seen_ids;

    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (textio::trim(lines[i]).empty()) continue;
        const std::string where = origin + ":" + std::to_string(i + 1);

        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(lines[i]);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(where + ": invalid JSON: " + e.what());
        }
        for (const char* key : {"id", "date", "user", "text", "platform"})
            if (!obj.contains(key))
                throw FormatError(where + ": missing required key '" +
                                  std::string(key) + "'");

        PostRecord post;
        try {
            post.id = obj["id"].is_string() ? obj["id"].get<std::string>()
                                            : obj["id"].dump();
            if (!seen_ids.insert(post.id).second)
                throw ValidationError(where + ": duplicate post id '" +
                                      post.id + "'");
            try {
                post.date = Date::parse(obj["date"].get<std::string>());
            } catch (const ParseError& e) {
                throw ParseError(where + ": " + e.what());
            }
            post.author = obj["user"].get<std::string>();
            post.text = obj["text"].get<std::string>();
            if (textio::trim(post.text).empty())
                throw ValidationError(where + ": post text is empty");

            const std::string platform =
                textio::to_lower_ascii(obj["platform"].get<std::string>());
            if (platform == "twitter")
                post.platform = Platform::Twitter;
            else if (platform == "reddit")
                post.platform = Platform::Reddit;
            else
                throw FormatError(where + ": unknown platform '" + platform + "'");

            if (obj.contains("upvotes")) {
                const auto upvotes = obj["upvotes"].get<std::int64_t>();
                if (upvotes < 0)
                    throw ValidationError(where + ": negative upvotes");
                post.upvotes = upvotes;
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        post.category = Category::Unassigned;
        posts.push_back(std::move(post));
    }
    return posts;
}

std::string serialize_posts(const std::vector<PostRecord>& posts) {
    std::string out;
    for (const auto& post : posts) {
        nlohmann::json obj{
            {"id", post.id},
            {"date", post.date.to_string()},
            {"user", post.author},
            {"text", post.text},
            {"platform", post.platform == Platform::Twitter ? "twitter" : "reddit"},
        };
        if (post.upvotes) obj["upvotes"] = *post.upvotes;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::vector<PostRecord> dedup_posts(const std::vector<PostRecord>& posts) {
    // Winner per (author, trimmed text): earliest date, ties to file order.
    std::map<std::pair<std::string, std::string>, std::size_t> winner;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        auto key = std::make_pair(posts[i].author, textio::trim(posts[i].text));
        auto [it, inserted] = winner.emplace(std::move(key), i);
        if (!inserted && posts[i].date < posts[it->second].date)
            it->second = i;
    }
    std::vector<bool> keep(posts.size(), false);
    for (const auto& [key, index] : winner) keep[index] = true;

    std::vector<PostRecord> out;
    out.reserve(winner.size());
    for (std::size_t i = 0; i < posts.size(); ++i)
        if (keep[i]) out.push_back(posts[i]);
    return out;
}

Partition partition_posts(const std::vector<PostRecord>& posts,
                          const HandleList& executives,
                          std::optional<std::size_t> sample_size,
                          std::uint64_t seed) {
    if (sample_size && *sample_size == 0)
        throw ValidationError("sample_size must be positive");

    Partition part;
    for (const auto& post : posts) {
        PostRecord tagged = post;
        if (executives.contains(textio::to_lower_ascii(post.author))) {
            tagged.category = Category::Executive;
            part.executive.push_back(std::move(tagged));
        } else {
            tagged.category = Category::General;
            part.general.push_back(std::move(tagged));
        }
    }

    if (sample_size && part.general.size() > *sample_size) {
        rng::Engine engine(rng::derive_seed(seed, "undersample"));
        const auto picks =
            rng::sample_indices(part.general.size(), *sample_size, engine);
        std::vector<PostRecord> sampled;
        sampled.reserve(picks.size());
        for (std::size_t index : picks)
            sampled.push_back(std::move(part.general[index]));
        part.general = std::move(sampled);
    }
    return part;
}

} // namespace sentifuse::ingest
