#include "sentifuse/sentiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

#include "json.hpp"

#include "sentifuse/errors.hpp"
#include "sentifuse/textio.hpp"

namespace sentifuse::sentiment {

namespace {

constexpr double kCompoundAlpha = 15.0;
constexpr int kNegationWindow = 3;

bool is_unicode_space(std::uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
        case 0x20: case 0x85: case 0xA0: case 0x1680:
        case 0x2028: case 0x2029: case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

// Decodes the code point at `i`, advancing `i` past it. Invalid sequences
// are consumed one byte at a time and returned as-is (never whitespace).
std::uint32_t next_code_point(std::string_view text, std::size_t& i) {
    const auto byte = [&](std::size_t k) {
        return static_cast<std::uint32_t>(static_cast<unsigned char>(text[k]));
    };
    const std::uint32_t b0 = byte(i);
    std::size_t len = 1;
    std::uint32_t cp = b0;
    if (b0 >= 0xF0)
        len = 4, cp = b0 & 0x07;
    else if (b0 >= 0xE0)
        len = 3, cp = b0 & 0x0F;
    else if (b0 >= 0xC0)
        len = 2, cp = b0 & 0x1F;
    if (len > 1) {
        if (i + len > text.size()) {
            ++i;
            return b0;
        }
        for (std::size_t k = 1; k < len; ++k) {
            const std::uint32_t bk = byte(i + k);
            if ((bk & 0xC0) != 0x80) {
                ++i;
                return b0;
            }
            cp = (cp << 6) | (bk & 0x3F);
        }
    }
    i += len;
    return cp;
}

bool is_ascii_punct(char c) {
    const unsigned char u = static_cast<unsigned char>(c);
    return u < 0x80 && std::ispunct(u);
}

} // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t i = 0;
    auto flush = [&] {
        if (current.empty()) return;
        std::size_t begin = 0, end = current.size();
        while (begin < end && is_ascii_punct(current[begin])) ++begin;
        while (end > begin && is_ascii_punct(current[end - 1])) --end;
        if (end > begin)
            tokens.push_back(
                textio::to_lower_ascii(std::string_view(current).substr(begin, end - begin)));
        current.clear();
    };
    while (i < text.size()) {
        const std::size_t start = i;
        const std::uint32_t cp = next_code_point(text, i);
        if (is_unicode_space(cp))
            flush();
        else
            current.append(text.substr(start, i - start));
    }
    flush();
    return tokens;
}

Lexicon Lexicon::load(const std::string& path) {
    return parse(textio::read_file(path), path);
}

Lexicon Lexicon::parse(const std::string& text, const std::string& origin) {
    enum class Section { Entries, Negators, Boosters };
    Section section = Section::Entries;
    Lexicon lexicon;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        std::string line = textio::trim(text.substr(start, nl - start));
        start = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        if (line == "#NEGATORS") {
            section = Section::Negators;
            continue;
        }
        if (line == "#BOOSTERS") {
            section = Section::Boosters;
            continue;
        }
        if (line[0] == '#') continue;

        const auto where = origin + ":" + std::to_string(line_no);
        const auto fields = textio::split(line, '\t');
        const std::string token = textio::to_lower_ascii(textio::trim(fields[0]));
        if (token.empty())
            throw FormatError(where + ": empty token");
        switch (section) {
            case Section::Entries: {
                if (fields.size() != 2)
                    throw FormatError(where + ": expected token<TAB>valence");
                char* endp = nullptr;
                const double valence = std::strtod(fields[1].c_str(), &endp);
                if (endp == fields[1].c_str() || *endp != '\0')
                    throw ParseError(where + ": bad valence '" + fields[1] + "'");
                lexicon.entries[token] = valence;
                break;
            }
            case Section::Negators:
                lexicon.negators.insert(token);
                break;
            case Section::Boosters: {
                if (fields.size() != 2)
                    throw FormatError(where + ": expected token<TAB>increment");
                char* endp = nullptr;
                const double inc = std::strtod(fields[1].c_str(), &endp);
                if (endp == fields[1].c_str() || *endp != '\0')
                    throw ParseError(where + ": bad increment '" + fields[1] + "'");
                lexicon.boosters[token] = inc;
                break;
            }
        }
    }
    lexicon.validate();
    return lexicon;
}

void Lexicon::validate() const {
    auto check_token = [](const std::string& token) {
        if (token.empty())
            throw ValidationError("lexicon token is empty");
        for (char c : token)
            if (c >= 'A' && c <= 'Z')
                throw ValidationError("lexicon token not lowercase: " + token);
    };
    for (const auto& [token, valence] : entries) {
        check_token(token);
        if (!std::isfinite(valence) || valence < -4.0 || valence > 4.0)
            throw ValidationError("valence out of [-4, 4] for token '" + token + "'");
    }
    for (const auto& token : negators) check_token(token);
    for (const auto& [token, inc] : boosters) {
        check_token(token);
        if (!std::isfinite(inc) || inc <= -1.0)
            throw ValidationError("booster increment must be finite and > -1: " + token);
    }
}

const Lexicon& Lexicon::builtin() {
    static const Lexicon instance = [] {
        Lexicon lex;
        lex.entries = {
            {"good", 1.9},      {"great", 3.1},      {"excellent", 2.7},
            {"best", 3.2},      {"amazing", 2.8},    {"awesome", 3.1},
            {"love", 3.2},      {"happy", 2.7},      {"win", 2.8},
            {"strong", 2.3},    {"growth", 2.0},     {"gain", 2.4},
            {"gains", 2.4},     {"profit", 2.3},     {"profits", 2.3},
            {"rally", 1.9},     {"surge", 2.3},      {"soar", 2.5},
            {"soars", 2.5},     {"boom", 2.1},       {"bullish", 2.4},
            {"moon", 2.0},      {"beat", 1.7},       {"beats", 1.7},
            {"record", 1.4},    {"safe", 1.8},       {"optimistic", 2.1},
            {"euphoria", 2.6},  {"rise", 1.6},       {"rises", 1.6},
            {"up", 1.2},        {"buy", 1.3},        {"upgrade", 1.8},
            {"outperform", 2.0},{"innovative", 1.9}, {"breakthrough", 2.4},
            {"bad", -2.5},      {"terrible", -2.1},  {"awful", -2.9},
            {"worst", -3.1},    {"horrible", -2.5},  {"hate", -2.7},
            {"sad", -2.1},      {"lose", -2.4},      {"loses", -2.4},
            {"loss", -2.3},     {"losses", -2.3},    {"weak", -1.9},
            {"decline", -1.8},  {"declines", -1.8},  {"crash", -2.9},
            {"crashes", -2.9},  {"plunge", -2.6},    {"plunges", -2.6},
            {"tank", -2.4},     {"tanks", -2.4},     {"bearish", -2.4},
            {"bust", -2.4},     {"miss", -1.6},      {"misses", -1.6},
            {"risk", -1.1},     {"risky", -1.4},     {"fear", -2.2},
            {"panic", -2.9},    {"pessimistic", -2.1},{"down", -1.2},
            {"fall", -1.6},     {"falls", -1.6},     {"sell", -0.9},
            {"selloff", -2.0},  {"dump", -2.2},      {"bankrupt", -3.4},
            {"bankruptcy", -3.4},{"fraud", -3.2},    {"scam", -3.3},
            {"lawsuit", -1.9},  {"recall", -1.5},    {"downgrade", -1.8},
            {"debt", -1.3},     {"bubble", -1.3},    {"recession", -2.5},
            {"overvalued", -1.7},{"undervalued", 1.3},
        };
        lex.negators = {"not",     "no",      "never",  "isnt",   "isn't",
                        "dont",    "don't",   "wont",   "won't",  "cant",
                        "can't",   "cannot",  "didnt",  "didn't", "doesnt",
                        "doesn't", "wasnt",   "wasn't", "werent", "weren't",
                        "aint",    "ain't",   "neither","nor",    "without",
                        "hardly",  "rarely",  "seldom", "nothing"};
        lex.boosters = {
            {"very", 0.293},      {"really", 0.293},   {"extremely", 0.293},
            {"absolutely", 0.293},{"incredibly", 0.293},{"hugely", 0.293},
            {"massively", 0.293}, {"totally", 0.293},  {"so", 0.293},
            {"too", 0.293},       {"super", 0.293},
            {"slightly", -0.293}, {"somewhat", -0.293},{"marginally", -0.293},
            {"barely", -0.293},   {"kinda", -0.293},
        };
        lex.validate();
        return lex;
    }();
    return instance;
}

SentimentScore lexicon_score(std::string_view text, const Lexicon& lexicon) {
    const auto tokens = tokenize(text);
    if (tokens.empty())
        throw ValidationError("cannot score empty text");

    double sum_adjusted = 0;
    double positive_mass = 0;
    double negative_mass = 0;
    double neutral_mass = 0;

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto entry = lexicon.entries.find(tokens[i]);
        if (entry == lexicon.entries.end()) {
            neutral_mass += 1.0; // unmatched tokens carry unit neutral mass
            continue;
        }
        double valence = entry->second;
        // Look back up to three tokens: any negator flips the sign once;
        // each booster scales by (1 + increment).
        bool negated = false;
        const std::size_t window_begin =
            i >= kNegationWindow ? i - kNegationWindow : 0;
        for (std::size_t k = window_begin; k < i; ++k) {
            if (lexicon.negators.count(tokens[k])) negated = true;
            const auto booster = lexicon.boosters.find(tokens[k]);
            if (booster != lexicon.boosters.end())
                valence *= 1.0 + booster->second;
        }
        if (negated) valence = -valence;

        sum_adjusted += valence;
        if (valence > 0)
            positive_mass += valence;
        else
            negative_mass += -valence;
    }

    SentimentScore score;
    score.source = Source::Lexicon;
    const double total = positive_mass + negative_mass + neutral_mass;
    if (total <= 0) {
        score.neutral = 1.0;
    } else {
        score.positive = positive_mass / total;
        score.negative = negative_mass / total;
        score.neutral = neutral_mass / total;
    }
    score.compound =
        sum_adjusted / std::sqrt(sum_adjusted * sum_adjusted + kCompoundAlpha);
    return score;
}

std::array<double, 3> softmax_normalize(const std::array<double, 3>& logits) {
    for (double v : logits)
        if (!std::isfinite(v))
            throw ValidationError("softmax input must be finite");
    const double peak = std::max({logits[0], logits[1], logits[2]});
    std::array<double, 3> out{};
    double total = 0;
    for (int i = 0; i < 3; ++i) {
        out[i] = std::exp(logits[i] - peak);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

AttachResult attach_external_scores(const std::vector<ingest::PostRecord>& posts,
                                    const LogitMap& scores) {
    std::vector<std::string> missing;
    for (const auto& post : posts)
        if (!scores.count(post.id)) missing.push_back(post.id);
    if (!missing.empty()) {
        std::string msg = "missing external scores for post ids:";
        for (const auto& id : missing) msg += " " + id;
        throw ValidationError(msg);
    }

    AttachResult result;
    result.posts.reserve(posts.size());
    std::set<std::string> used;
    for (const auto& post : posts) {
        const auto triplet = softmax_normalize(scores.at(post.id));
        SentimentScore score;
        score.positive = triplet[0];
        score.negative = triplet[1];
        score.neutral = triplet[2];
        score.source = Source::External;
        used.insert(post.id);
        result.posts.push_back({post, score});
    }
    result.ignored_scores = scores.size() - used.size();
    return result;
}

LogitMap load_scores_jsonl(const std::string& path) {
    return parse_scores_jsonl(textio::read_file(path), path);
}

LogitMap parse_scores_jsonl(const std::string& text, const std::string& origin) {
    LogitMap scores;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = textio::trim(text.substr(start, nl - start));
        start = nl + 1;
        ++line_no;
        if (line.empty()) {
            if (start > text.size()) break;
            continue;
        }
        const std::string where = origin + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(where + ": invalid JSON: " + e.what());
        }
        if (!obj.contains("id") || !obj.contains("logits"))
            throw FormatError(where + ": expected keys 'id' and 'logits'");
        const auto& logits = obj["logits"];
        if (!logits.is_array() || logits.size() != 3)
            throw FormatError(where + ": logits must be [positive, negative, neutral]");
        std::array<double, 3> values{};
        std::string id;
        try {
            for (int i = 0; i < 3; ++i) values[i] = logits[i].get<double>();
            id = obj["id"].is_string() ? obj["id"].get<std::string>()
                                       : obj["id"].dump();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        for (double v : values)
            if (!std::isfinite(v))
                throw ValidationError(where + ": non-finite logit");
        if (!scores.emplace(id, values).second)
            throw ValidationError(where + ": duplicate score id '" + id + "'");
    }
    return scores;
}

std::vector<ScoredPost> score_with_lexicon(const std::vector<ingest::PostRecord>& posts,
                                           const Lexicon& lexicon) {
    std::vector<ScoredPost> out;
    out.reserve(posts.size());
    for (const auto& post : posts)
        out.push_back({post, lexicon_score(post.text, lexicon)});
    return out;
}

std::string serialize_scored_posts(const std::vector<ScoredPost>& posts) {
    std::string out;
    for (const auto& scored : posts) {
        nlohmann::json obj{
            {"id", scored.post.id},
            {"date", scored.post.date.to_string()},
            {"positive", scored.score.positive},
            {"negative", scored.score.negative},
            {"neutral", scored.score.neutral},
            {"source",
             scored.score.source == Source::Lexicon ? "lexicon" : "external"},
        };
        if (scored.score.compound) obj["compound"] = *scored.score.compound;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

std::vector<ScoredPost> parse_scored_posts(const std::string& text,
                                           const std::string& origin) {
    std::vector<ScoredPost> out;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string::npos) nl = text.size();
        const std::string line = textio::trim(text.substr(start, nl - start));
        start = nl + 1;
        ++line_no;
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(where + ": invalid JSON: " + e.what());
        }
        for (const char* key : {"id", "date", "positive", "negative", "neutral"})
            if (!obj.contains(key))
                throw FormatError(where + ": missing key '" + std::string(key) + "'");
        ScoredPost scored;
        try {
            scored.post.id = obj["id"].get<std::string>();
            scored.post.date = Date::parse(obj["date"].get<std::string>());
            scored.score.positive = obj["positive"].get<double>();
            scored.score.negative = obj["negative"].get<double>();
            scored.score.neutral = obj["neutral"].get<double>();
            if (obj.contains("compound"))
                scored.score.compound = obj["compound"].get<double>();
            scored.score.source = obj.value("source", "lexicon") == "external"
                                      ? Source::External
                                      : Source::Lexicon;
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(where + ": " + e.what());
        }
        out.push_back(std::move(scored));
    }
    return out;
}

std::vector<ScoredPost> load_scored_posts(const std::string& path) {
    return parse_scored_posts(textio::read_file(path), path);
}

} // namespace sentifuse::sentiment
