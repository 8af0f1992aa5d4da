#include "reqgen/graphml.hpp"

#include <cctype>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "reqgen/csv.hpp"
#include "reqgen/errors.hpp"

namespace reqgen {

namespace {

// Just enough XML to read GraphML: start/end/self-closing tags with
// attributes, text content, comments, processing instructions. No CDATA, no
// namespaces beyond ignoring prefixes.
struct XmlTag {
    std::string name;
    std::map<std::string, std::string> attrs;
    bool closing = false;       // </name>
    bool self_closing = false;  // <name/>
};

std::string decode_entities(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '&') {
            out += s[i];
            continue;
        }
        const auto semi = s.find(';', i);
        if (semi == std::string::npos) {
            out += s[i];
            continue;
        }
        const std::string ent = s.substr(i + 1, semi - i - 1);
        if (ent == "amp") out += '&';
        else if (ent == "lt") out += '<';
        else if (ent == "gt") out += '>';
        else if (ent == "quot") out += '"';
        else if (ent == "apos") out += '\'';
        else if (!ent.empty() && ent[0] == '#') {
            const long code = std::strtol(ent.c_str() + 1, nullptr, ent[1] == 'x' ? 16 : 10);
            out += static_cast<char>(code);
        } else {
            out += '&' + ent + ';';
        }
        i = semi;
    }
    return out;
}

class XmlScanner {
  public:
    XmlScanner(const std::string& text, const std::string& path) : text_(text), path_(path) {}

    // Advances to the next tag; returns false at end of input. Text content
    // seen on the way is appended to `pending_text`.
    bool next_tag(XmlTag& tag, std::string& pending_text) {
        for (;;) {
            const auto lt = text_.find('<', pos_);
            if (lt == std::string::npos) {
                pos_ = text_.size();
                return false;
            }
            pending_text += text_.substr(pos_, lt - pos_);
            if (starts_with(lt, "<!--")) {
                const auto end = text_.find("-->", lt);
                if (end == std::string::npos) die("unterminated comment");
                pos_ = end + 3;
                continue;
            }
            if (starts_with(lt, "<?") || starts_with(lt, "<!")) {
                const auto end = text_.find('>', lt);
                if (end == std::string::npos) die("unterminated declaration");
                pos_ = end + 1;
                continue;
            }
            const auto gt = text_.find('>', lt);
            if (gt == std::string::npos) die("unterminated tag");
            parse_tag(text_.substr(lt + 1, gt - lt - 1), tag);
            pos_ = gt + 1;
            return true;
        }
    }

  private:
    bool starts_with(std::size_t at, const char* prefix) const {
        return text_.compare(at, std::strlen(prefix), prefix) == 0;
    }

    [[noreturn]] void die(const std::string& what) const {
        fail(Errc::parse_error, path_ + ": " + what);
    }

    void parse_tag(std::string body, XmlTag& tag) const {
        tag = XmlTag{};
        if (body.empty()) die("empty tag");
        if (body.back() == '/') {
            tag.self_closing = true;
            body.pop_back();
        }
        std::size_t i = 0;
        if (body[0] == '/') {
            tag.closing = true;
            i = 1;
        }
        const std::size_t name_start = i;
        while (i < body.size() && !std::isspace(static_cast<unsigned char>(body[i]))) ++i;
        tag.name = body.substr(name_start, i - name_start);
        // Drop a namespace prefix if present.
        const auto colon = tag.name.find(':');
        if (colon != std::string::npos) tag.name = tag.name.substr(colon + 1);
        while (i < body.size()) {
            while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
            if (i >= body.size()) break;
            const std::size_t key_start = i;
            while (i < body.size() && body[i] != '=' &&
                   !std::isspace(static_cast<unsigned char>(body[i])))
                ++i;
            std::string key = body.substr(key_start, i - key_start);
            while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
            if (i >= body.size() || body[i] != '=') die("attribute '" + key + "' without value");
            ++i;
            while (i < body.size() && std::isspace(static_cast<unsigned char>(body[i]))) ++i;
            if (i >= body.size() || (body[i] != '"' && body[i] != '\''))
                die("attribute '" + key + "' value must be quoted");
            const char quote = body[i++];
            const auto end = body.find(quote, i);
            if (end == std::string::npos) die("unterminated attribute value for '" + key + "'");
            tag.attrs[key] = decode_entities(body.substr(i, end - i));
            i = end + 1;
        }
    }

    const std::string& text_;
    const std::string path_;
    std::size_t pos_ = 0;
};

// Leading numeric value of a string that may carry units or list syntax
// (e.g. "50", "50 mph", "['30', '40']"). Returns nullopt when no number is
// present.
std::optional<double> leading_number(const std::string& s) {
    std::size_t i = 0;
    while (i < s.size() && !(std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == '-' ||
                             s[i] == '+' || s[i] == '.'))
        ++i;
    if (i == s.size()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(s.substr(i), &used);
        if (used == 0) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace

RoadNetwork load_network_graphml(const std::string& path, NetworkKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io_error, "cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();

    // key id -> attribute name, per target domain.
    std::map<std::string, std::string> node_keys, edge_keys;

    struct PendingNode {
        std::string id;
        std::map<std::string, std::string> data;
    };
    struct PendingEdge {
        std::string source, target;
        std::map<std::string, std::string> data;
    };

    RoadNetwork net;
    net.kind = kind;
    std::vector<PendingEdge> edges;

    XmlScanner scanner(text, path);
    XmlTag tag;
    std::string text_content;

    std::optional<PendingNode> cur_node;
    std::optional<PendingEdge> cur_edge;
    std::string cur_data_key;
    bool in_data = false;

    auto flush_node = [&](const PendingNode& n) {
        const auto x = n.data.find("x");
        const auto y = n.data.find("y");
        if (x == n.data.end() || y == n.data.end())
            fail(Errc::missing_attribute, path + ": node " + n.id + " lacks x/y coordinates");
        net.add_node(csv::parse_int(n.id, "node id"),
                     {csv::parse_double(x->second, "node x"), csv::parse_double(y->second, "node y")});
    };

    while (true) {
        text_content.clear();
        if (!scanner.next_tag(tag, text_content)) break;
        if (in_data && !cur_data_key.empty() && (cur_node || cur_edge)) {
            auto& store = cur_node ? cur_node->data : cur_edge->data;
            store[cur_data_key] += decode_entities(text_content);
        }
        if (tag.name == "key" && !tag.closing) {
            const auto id = tag.attrs.find("id");
            const auto domain = tag.attrs.find("for");
            const auto name = tag.attrs.find("attr.name");
            if (id != tag.attrs.end() && domain != tag.attrs.end() && name != tag.attrs.end()) {
                if (domain->second == "node") node_keys[id->second] = name->second;
                else if (domain->second == "edge") edge_keys[id->second] = name->second;
            }
        } else if (tag.name == "node") {
            if (tag.closing) {
                if (cur_node) flush_node(*cur_node);
                cur_node.reset();
            } else {
                const auto id = tag.attrs.find("id");
                if (id == tag.attrs.end())
                    fail(Errc::missing_attribute, path + ": node without id");
                PendingNode n;
                n.id = id->second;
                if (tag.self_closing) {
                    flush_node(n);
                } else {
                    cur_node = std::move(n);
                }
            }
        } else if (tag.name == "edge") {
            if (tag.closing) {
                if (cur_edge) edges.push_back(*cur_edge);
                cur_edge.reset();
            } else {
                const auto s = tag.attrs.find("source");
                const auto t = tag.attrs.find("target");
                if (s == tag.attrs.end() || t == tag.attrs.end())
                    fail(Errc::missing_attribute, path + ": edge without source/target");
                PendingEdge e;
                e.source = s->second;
                e.target = t->second;
                if (tag.self_closing) {
                    edges.push_back(e);
                } else {
                    cur_edge = std::move(e);
                }
            }
        } else if (tag.name == "data") {
            if (tag.closing) {
                in_data = false;
                cur_data_key.clear();
            } else if (!tag.self_closing) {
                const auto key = tag.attrs.find("key");
                if (key != tag.attrs.end() && (cur_node || cur_edge)) {
                    const auto& keys = cur_node ? node_keys : edge_keys;
                    const auto name = keys.find(key->second);
                    if (name != keys.end()) {
                        cur_data_key = name->second;
                        in_data = true;
                        // Ensure the entry exists even for empty content.
                        (cur_node ? cur_node->data : cur_edge->data)[cur_data_key];
                    }
                }
            }
        }
    }

    for (const PendingEdge& e : edges) {
        const auto len = e.data.find("length");
        if (len == e.data.end())
            fail(Errc::missing_attribute,
                 path + ": edge " + e.source + "->" + e.target + " lacks length");
        double ms = 0.0;  // 0 = fall back to kind default in add_arc
        const auto speed = e.data.find("maxspeed");
        if (speed != e.data.end())
            if (const auto v = leading_number(speed->second)) ms = *v;
        net.add_arc(csv::parse_int(e.source, "edge source"), csv::parse_int(e.target, "edge target"),
                    csv::parse_double(len->second, "edge length"), ms);
    }
    if (net.empty()) fail(Errc::empty_network, path + ": no nodes");
    return net;
}

namespace {

std::string encode_entities(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

void write_locations_graphml(
    const std::string& path, const std::vector<LocationNode>& nodes,
    const std::vector<std::tuple<std::size_t, std::size_t, double>>& arcs) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write '" + path + "'");
    out << "<?xml version='1.0' encoding='utf-8'?>\n";
    out << "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";
    out << "  <key id=\"d0\" for=\"node\" attr.name=\"x\" attr.type=\"double\"/>\n";
    out << "  <key id=\"d1\" for=\"node\" attr.name=\"y\" attr.type=\"double\"/>\n";
    out << "  <key id=\"d2\" for=\"edge\" attr.name=\"travel_time\" attr.type=\"double\"/>\n";
    out << "  <graph edgedefault=\"directed\">\n";
    for (const LocationNode& n : nodes) {
        out << "    <node id=\"" << encode_entities(n.id) << "\">"
            << "<data key=\"d0\">" << csv::format_double(n.pos.lon) << "</data>"
            << "<data key=\"d1\">" << csv::format_double(n.pos.lat) << "</data>"
            << "</node>\n";
    }
    for (const auto& [i, j, tt] : arcs) {
        out << "    <edge source=\"" << encode_entities(nodes[i].id) << "\" target=\""
            << encode_entities(nodes[j].id) << "\">"
            << "<data key=\"d2\">" << csv::format_double(tt) << "</data></edge>\n";
    }
    out << "  </graph>\n</graphml>\n";
    if (!out) fail(Errc::io_error, "write failed for '" + path + "'");
}

}  // namespace reqgen
