#include "adp/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace adp {

namespace {

// Key/value view of the structured text formats: `key = value` lines,
// `#` comments, values possibly continuing on following lines until the next
// key. Order of keys is preserved.
struct KvEntry {
    std::string key;
    std::string value;
    int line = 0;
};

bool looks_like_key_line(const std::string& line, std::size_t eq) {
    if (eq == std::string::npos) return false;
    for (std::size_t i = 0; i < eq; ++i) {
        char c = line[i];
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || std::isspace(static_cast<unsigned char>(c))))
            return false;
    }
    std::string key = line.substr(0, eq);
    return key.find_first_not_of(" \t") != std::string::npos;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<KvEntry> parse_kv(std::istream& in, const std::string& origin) {
    std::vector<KvEntry> entries;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::string t = trim(line);
        if (t.empty()) continue;
        std::size_t eq = line.find('=');
        if (looks_like_key_line(line, eq)) {
            KvEntry e;
            e.key = trim(line.substr(0, eq));
            e.value = trim(line.substr(eq + 1));
            e.line = lineno;
            entries.push_back(std::move(e));
        } else {
            if (entries.empty())
                throw InvalidInputError(origin + ":" + std::to_string(lineno) +
                                        ": expected 'key = value', got '" + t + "'");
            entries.back().value += " " + t;  // continuation of the previous value
        }
    }
    return entries;
}

std::vector<double> parse_reals(const std::string& value, const std::string& what) {
    std::vector<double> out;
    std::istringstream ss(value);
    std::string tok;
    while (ss >> tok) {
        // commas are permitted as separators
        for (char& c : tok)
            if (c == ',') c = ' ';
        std::istringstream ts(tok);
        double v;
        while (ts >> v) out.push_back(v);
        if (!ts.eof()) throw InvalidInputError(what + ": cannot parse '" + tok + "' as a number");
    }
    return out;
}

long parse_int(const std::string& value, const std::string& what) {
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(trim(value), &pos);
    } catch (const std::exception&) {
        throw InvalidInputError(what + ": cannot parse '" + value + "' as an integer");
    }
    if (pos != trim(value).size())
        throw InvalidInputError(what + ": trailing characters in '" + value + "'");
    return v;
}

double parse_real(const std::string& value, const std::string& what) {
    std::vector<double> v = parse_reals(value, what);
    if (v.size() != 1) throw InvalidInputError(what + ": expected one number, got '" + value + "'");
    return v[0];
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Mdp parse_mdp_text(std::istream& in, const std::string& origin) {
    std::vector<KvEntry> entries = parse_kv(in, origin);
    Mdp mdp;
    bool have_s = false, have_a = false, have_discount = false, have_r = false, have_p = false;

    for (const KvEntry& e : entries) {
        std::string where = origin + ":" + std::to_string(e.line) + ": " + e.key;
        if (e.key == "num_states") {
            mdp.num_states = static_cast<int>(parse_int(e.value, where));
            have_s = true;
        } else if (e.key == "num_actions") {
            mdp.num_actions = static_cast<int>(parse_int(e.value, where));
            have_a = true;
        } else if (e.key == "discount") {
            mdp.discount = parse_real(e.value, where);
            have_discount = true;
        } else if (e.key == "reward_range") {
            std::string v = trim(e.value);
            if (v == "unit")
                mdp.unit_rewards = true;
            else if (v == "free")
                mdp.unit_rewards = false;
            else
                throw InvalidInputError(where + ": expected 'unit' or 'free'");
        } else if (e.key == "reward") {
            if (!have_s || !have_a)
                throw InvalidInputError(where + ": num_states/num_actions must come first");
            std::vector<double> vals = parse_reals(e.value, where);
            std::size_t expect = static_cast<std::size_t>(mdp.num_states) *
                                 static_cast<std::size_t>(mdp.num_actions);
            if (vals.size() != expect)
                throw InvalidInputError(where + ": expected " + std::to_string(expect) +
                                        " values, got " + std::to_string(vals.size()));
            mdp.reward.resize(mdp.num_states, mdp.num_actions);
            std::size_t i = 0;
            for (int s = 0; s < mdp.num_states; ++s)
                for (int a = 0; a < mdp.num_actions; ++a) mdp.reward(s, a) = vals[i++];
            have_r = true;
        } else if (e.key == "transition") {
            if (!have_s || !have_a)
                throw InvalidInputError(where + ": num_states/num_actions must come first");
            std::vector<double> vals = parse_reals(e.value, where);
            std::size_t expect = static_cast<std::size_t>(mdp.num_states) *
                                 static_cast<std::size_t>(mdp.num_actions) *
                                 static_cast<std::size_t>(mdp.num_states);
            if (vals.size() != expect)
                throw InvalidInputError(where + ": expected " + std::to_string(expect) +
                                        " values, got " + std::to_string(vals.size()));
            mdp.transition.assign(static_cast<std::size_t>(mdp.num_actions),
                                  Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states));
            std::size_t i = 0;
            for (int s = 0; s < mdp.num_states; ++s)
                for (int a = 0; a < mdp.num_actions; ++a)
                    for (int s2 = 0; s2 < mdp.num_states; ++s2)
                        mdp.transition[static_cast<std::size_t>(a)](s, s2) = vals[i++];
            have_p = true;
        } else {
            throw InvalidInputError(where + ": unknown key");
        }
    }
    if (!have_s || !have_a || !have_discount || !have_r || !have_p)
        throw InvalidInputError(origin + ": missing one of num_states, num_actions, discount, "
                                         "reward, transition");
    mdp.validate();
    return mdp;
}

Mdp load_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open MDP file '" + path + "'");
    return parse_mdp_text(in, path);
}

std::string format_mdp_text(const Mdp& mdp) {
    std::ostringstream out;
    out << "num_states = " << mdp.num_states << "\n";
    out << "num_actions = " << mdp.num_actions << "\n";
    out << "discount = " << fmt(mdp.discount) << "\n";
    if (!mdp.unit_rewards) out << "reward_range = free\n";
    out << "reward =\n";
    for (int s = 0; s < mdp.num_states; ++s) {
        out << " ";
        for (int a = 0; a < mdp.num_actions; ++a) out << " " << fmt(mdp.reward(s, a));
        out << "\n";
    }
    out << "transition =\n";
    for (int s = 0; s < mdp.num_states; ++s)
        for (int a = 0; a < mdp.num_actions; ++a) {
            out << " ";
            for (int s2 = 0; s2 < mdp.num_states; ++s2)
                out << " " << fmt(mdp.transition[static_cast<std::size_t>(a)](s, s2));
            out << "\n";
        }
    return out.str();
}

FeatureSystem parse_features_text(std::istream& in, const std::string& origin) {
    std::vector<KvEntry> entries = parse_kv(in, origin);
    int d = -1;
    std::vector<double> vals;
    for (const KvEntry& e : entries) {
        std::string where = origin + ":" + std::to_string(e.line) + ": " + e.key;
        if (e.key == "d") {
            d = static_cast<int>(parse_int(e.value, where));
        } else if (e.key == "phi") {
            if (d <= 0) throw InvalidInputError(where + ": d must come first and be positive");
            vals = parse_reals(e.value, where);
        } else {
            throw InvalidInputError(where + ": unknown key");
        }
    }
    if (d <= 0 || vals.empty())
        throw InvalidInputError(origin + ": feature file needs d and phi");
    if (vals.size() % static_cast<std::size_t>(d) != 0)
        throw InvalidInputError(origin + ": phi has " + std::to_string(vals.size()) +
                                " values, not a multiple of d = " + std::to_string(d));
    Eigen::Index rows = static_cast<Eigen::Index>(vals.size()) / d;
    Eigen::MatrixXd phi(rows, d);
    std::size_t i = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c) phi(r, c) = vals[i++];
    return FeatureSystem::create(std::move(phi));
}

FeatureSystem load_features_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidInputError("cannot open feature file '" + path + "'");
    return parse_features_text(in, path);
}

std::string format_features_text(const FeatureSystem& fs) {
    std::ostringstream out;
    out << "d = " << fs.dim() << "\n";
    out << "phi =\n";
    for (int r = 0; r < fs.num_states(); ++r) {
        out << " ";
        for (int c = 0; c < fs.dim(); ++c) out << " " << fmt(fs.phi()(r, c));
        out << "\n";
    }
    return out.str();
}

std::string trace_to_csv(const IterationTrace& trace, const BoundCurve& curve) {
    std::ostringstream out;
    const int d = trace.records.empty() ? 0 : static_cast<int>(trace.records.front().theta.size());
    out << "k";
    for (int i = 0; i < d; ++i) out << ",theta_" << i;
    out << ",err_policy,err_iterate,delta_k,bound_total_k,lookahead_gap,rollout_noise_norm,status\n";
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const IterationRecord& rec = trace.records[i];
        out << rec.k;
        for (int c = 0; c < d; ++c) out << "," << fmt(rec.theta(c));
        out << "," << fmt(rec.err_policy) << "," << fmt(rec.err_iterate) << ","
            << fmt(rec.delta_k);
        if (curve.valid && rec.k <= curve.max_k())
            out << "," << fmt(curve.total(rec.k));
        else
            out << ",nan";
        out << "," << fmt(rec.lookahead_gap) << "," << fmt(rec.rollout_noise_norm);
        if (i + 1 == trace.records.size())
            out << "," << (trace.status == RunStatus::completed ? "completed" : "diverged");
        else
            out << ",ok";
        out << "\n";
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInputError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw InvalidInputError("failed writing '" + path + "'");
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* variant_name(Variant v) {
    switch (v) {
        case Variant::least_squares: return "least_squares";
        case Variant::gradient_descent: return "gradient_descent";
        case Variant::modified_ls: return "modified_ls";
    }
    throw InternalError("variant_name: unreachable");
}

Variant variant_from_name(const std::string& name) {
    if (name == "least_squares") return Variant::least_squares;
    if (name == "gradient_descent") return Variant::gradient_descent;
    if (name == "modified_ls") return Variant::modified_ls;
    throw InvalidInputError("unknown variant '" + name +
                            "' (expected least_squares, gradient_descent, or modified_ls)");
}

}  // namespace adp
