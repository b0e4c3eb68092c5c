#include "rotorcover/generator.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

namespace rotorcover {

namespace {

constexpr int kMaxDegree = 254; // rotor state lives in a byte in the walk engine

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

long long parse_int(std::string_view s, int line, const std::string& what) {
    try {
        size_t used = 0;
        long long v = std::stoll(std::string(s), &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        fail(line, what + ": '" + std::string(s) + "' is not an integer");
    }
}

std::vector<std::string_view> split_array(std::string_view s, int line) {
    s = trim(s);
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        fail(line, "expected an array like [1, 2, 3]");
    s.remove_prefix(1);
    s.remove_suffix(1);
    std::vector<std::string_view> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == ',') {
            std::string_view item = trim(s.substr(start, i - start));
            if (item.empty()) fail(line, "empty array element");
            out.push_back(item);
            start = i + 1;
        }
    }
    return out;
}

void check_strong_connectivity(const Generator& g) {
    const int n = g.n_types;
    std::vector<std::vector<int>> fwd(n), bwd(n);
    for (int i = 0; i < n; ++i)
        for (int t : g.words[i]) {
            fwd[i].push_back(t);
            bwd[t].push_back(i);
        }
    auto reach = [n](const std::vector<std::vector<int>>& adj) {
        std::vector<char> seen(n, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int w : adj[v])
                if (!seen[w]) {
                    seen[w] = 1;
                    stack.push_back(w);
                }
        }
        return seen;
    };
    const auto from_root = reach(fwd);
    const auto to_root = reach(bwd);
    for (int i = 0; i < n; ++i) {
        if (!from_root[i])
            throw ParseError("not strongly connected: type " + std::to_string(i + 1) +
                             " is not reachable from type 1");
        if (!to_root[i])
            throw ParseError("not strongly connected: type 1 is not reachable from type " +
                             std::to_string(i + 1));
    }
}

} // namespace

Generator parse_generator(std::string_view text) {
    long long n_types = -1;
    std::map<int, std::vector<long long>> raw_words;   // 1-based type -> entries
    std::map<int, std::vector<Rational>> raw_rotors;   // 1-based type -> probs
    std::map<int, int> word_lines, rotor_lines;

    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;

        if (size_t hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        size_t eq = line.find('=');
        if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (value.empty()) fail(line_no, "missing value for key '" + key + "'");

        if (key == "n_types") {
            if (n_types >= 0) fail(line_no, "duplicate key n_types");
            n_types = parse_int(value, line_no, "n_types");
            if (n_types < 1) fail(line_no, "n_types must be >= 1");
            if (n_types > 10000) fail(line_no, "n_types out of range");
        } else if (key.rfind("word.", 0) == 0 || key.rfind("rotor.", 0) == 0) {
            const bool is_word = key[0] == 'w';
            const std::string idx_text = key.substr(is_word ? 5 : 6);
            long long idx = parse_int(idx_text, line_no, "type index in '" + key + "'");
            if (idx < 1) fail(line_no, "type index must be >= 1 in '" + key + "'");
            const int i = static_cast<int>(idx);
            if (is_word) {
                if (raw_words.count(i)) fail(line_no, "duplicate key word." + std::to_string(i));
                word_lines[i] = line_no;
                auto items = split_array(value, line_no);
                std::vector<long long>& w = raw_words[i];
                for (const auto& item : items)
                    w.push_back(parse_int(item, line_no, "entry of word." + std::to_string(i)));
            } else {
                if (raw_rotors.count(i)) fail(line_no, "duplicate key rotor." + std::to_string(i));
                rotor_lines[i] = line_no;
                auto items = split_array(value, line_no);
                std::vector<Rational>& r = raw_rotors[i];
                for (const auto& item : items) {
                    try {
                        r.push_back(rational_from_literal(item));
                    } catch (const std::invalid_argument& e) {
                        fail(line_no, std::string("rotor.") + std::to_string(i) + ": " + e.what());
                    }
                }
            }
        } else {
            fail(line_no, "unknown key '" + key + "'");
        }
    }

    if (n_types < 0) throw ParseError("missing required key n_types");
    const int n = static_cast<int>(n_types);

    Generator g;
    g.n_types = n;
    g.words.resize(n);
    for (const auto& [i, w] : raw_words)
        if (i > n)
            fail(word_lines[i], "word." + std::to_string(i) + " exceeds n_types = " +
                                    std::to_string(n));
    for (int i = 1; i <= n; ++i) {
        auto it = raw_words.find(i);
        if (it == raw_words.end())
            throw ParseError("missing word for type " + std::to_string(i));
        const int line = word_lines[i];
        if (it->second.empty()) fail(line, "empty word for type " + std::to_string(i));
        if (static_cast<int>(it->second.size()) > kMaxDegree)
            fail(line, "word." + std::to_string(i) + " has more than " +
                           std::to_string(kMaxDegree) + " children");
        for (size_t k = 0; k < it->second.size(); ++k) {
            long long t = it->second[k];
            if (t < 1 || t > n)
                fail(line, "word." + std::to_string(i) + " entry " + std::to_string(k + 1) +
                               " is type " + std::to_string(t) + ", out of range 1.." +
                               std::to_string(n));
            g.words[i - 1].push_back(static_cast<int>(t - 1));
        }
    }

    if (!raw_rotors.empty()) {
        g.rotor_overrides.resize(n);
        for (const auto& [i, probs] : raw_rotors) {
            const int line = rotor_lines[i];
            if (i > n)
                fail(line, "rotor." + std::to_string(i) + " exceeds n_types = " +
                               std::to_string(n));
            const int d = g.degree(i - 1);
            if (static_cast<int>(probs.size()) != d + 1)
                fail(line, "rotor." + std::to_string(i) + " must have d_i + 1 = " +
                               std::to_string(d + 1) + " entries, got " +
                               std::to_string(probs.size()));
            Rational sum = 0;
            for (size_t k = 0; k < probs.size(); ++k) {
                if (probs[k] < 0)
                    fail(line, "rotor." + std::to_string(i) + " entry " + std::to_string(k) +
                                   " is negative");
                sum += probs[k];
            }
            if (abs(sum - 1) > Rational(1, 1000000000000LL))
                fail(line, "rotor." + std::to_string(i) + " probabilities sum to " +
                               to_string(sum) + ", expected 1");
            g.rotor_overrides[i - 1] = probs;
        }
    }

    check_strong_connectivity(g);
    return g;
}

Generator load_generator(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open generator file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_generator(ss.str());
}

std::string serialize_generator(const Generator& g) {
    std::ostringstream out;
    out << "n_types = " << g.n_types << "\n";
    for (int i = 0; i < g.n_types; ++i) {
        out << "word." << (i + 1) << " = [";
        for (size_t k = 0; k < g.words[i].size(); ++k) {
            if (k) out << ", ";
            out << (g.words[i][k] + 1);
        }
        out << "]\n";
    }
    if (!g.rotor_overrides.empty()) {
        for (int i = 0; i < g.n_types; ++i) {
            if (g.rotor_overrides[i].empty()) continue;
            out << "rotor." << (i + 1) << " = [";
            for (size_t k = 0; k < g.rotor_overrides[i].size(); ++k) {
                if (k) out << ", ";
                out << decimal_string(g.rotor_overrides[i][k]);
            }
            out << "]\n";
        }
    }
    return out.str();
}

std::vector<std::vector<Rational>> parse_rotor_overrides(const std::string& law_text,
                                                         const Generator& g) {
    Generator bare = g;
    bare.rotor_overrides.clear();
    Generator merged;
    // Law text goes first so its line numbers survive into error messages.
    try {
        merged = parse_generator(law_text + "\n" + serialize_generator(bare));
    } catch (const ParseError& e) {
        throw ParseError(std::string("law file: ") + e.what());
    }
    if (merged.rotor_overrides.empty())
        throw ParseError("law file: no rotor.<i> entries found");
    bare.rotor_overrides = merged.rotor_overrides;
    if (!(bare == merged))
        throw ParseError("law file: only rotor.<i> keys are allowed");
    return merged.rotor_overrides;
}

MatQ adjacency(const Generator& g) {
    MatQ d(g.n_types);
    for (int i = 0; i < g.n_types; ++i)
        for (int t : g.words[i]) d(i, t) += 1;
    return d;
}

MatD adjacency_real(const Generator& g) { return to_real(adjacency(g)); }

bool is_palindromic(const Generator& g) {
    for (const auto& w : g.words) {
        for (size_t k = 0; k < w.size() / 2; ++k)
            if (w[k] != w[w.size() - 1 - k]) return false;
    }
    return true;
}

} // namespace rotorcover
