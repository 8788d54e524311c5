#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

#include "memegp/errors.hpp"
#include "memegp/program.hpp"

namespace memegp {

namespace {

    void append_number(std::string& out, double v)
    {
        std::array<char, 32> buf {};
        auto const [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
        out.append(buf.data(), ptr);
    }

    void write_node(std::string& out, ProgramTree const& tree, std::size_t i)
    {
        auto const& node = tree.node(i);
        out += '(';
        out += token(node.kind);
        switch (node.kind) {
        case NodeKind::FilterTerm:
            for (auto w : node.filter().coefficients) {
                out += ' ';
                append_number(out, w);
            }
            break;
        case NodeKind::WindowTerm: {
            auto const& w = node.window();
            out += ' ';
            out += to_string(w.shape);
            for (auto v : { w.pos_x, w.pos_y, w.size_w, w.size_h }) {
                out += ' ';
                append_number(out, v);
            }
            break;
        }
        case NodeKind::Const:
            out += ' ';
            append_number(out, node.constant());
            break;
        default:
            for (auto child : tree.children(i)) {
                out += ' ';
                write_node(out, tree, child);
            }
        }
        out += ')';
    }

    class Parser {
    public:
        explicit Parser(std::string_view text)
            : text_(text)
        {
        }

        auto parse() -> std::vector<Node>
        {
            std::vector<Node> nodes;
            parse_node(nodes);
            skip_space();
            if (pos_ != text_.size()) {
                throw ParseError("unexpected trailing text", pos_);
            }
            return nodes;
        }

    private:
        void skip_space()
        {
            while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' || text_[pos_] == '\r')) {
                ++pos_;
            }
        }

        void expect(char c)
        {
            skip_space();
            if (pos_ >= text_.size()) {
                throw ParseError(std::string("unexpected end of input, expected '") + c + "'", pos_);
            }
            if (text_[pos_] != c) {
                throw ParseError(std::string("expected '") + c + "'", pos_);
            }
            ++pos_;
        }

        auto atom() -> std::string_view
        {
            skip_space();
            auto const start = pos_;
            while (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ' ' && text_[pos_] != '\t' && text_[pos_] != '\n' && text_[pos_] != '\r') {
                ++pos_;
            }
            if (start == pos_) {
                throw ParseError(pos_ >= text_.size() ? "unexpected end of input" : "expected an atom", pos_);
            }
            return text_.substr(start, pos_ - start);
        }

        auto number() -> double
        {
            auto const start = (skip_space(), pos_);
            auto const tok = atom();
            double v = 0.0;
            auto const [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc {} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
                throw ParseError("invalid number '" + std::string(tok) + "'", start);
            }
            return v;
        }

        void parse_node(std::vector<Node>& out)
        {
            expect('(');
            auto const head_pos = (skip_space(), pos_);
            auto const head = atom();
            auto const kind = lookup(head, head_pos);
            switch (kind) {
            case NodeKind::FilterTerm: {
                Filter f;
                for (auto& w : f.coefficients) {
                    w = number();
                }
                out.push_back({ kind, f });
                break;
            }
            case NodeKind::WindowTerm: {
                auto const shape_pos = (skip_space(), pos_);
                auto const shape_tok = atom();
                WindowSpec w;
                if (shape_tok == "rect") {
                    w.shape = WindowShape::Rectangle;
                } else if (shape_tok == "row") {
                    w.shape = WindowShape::Row;
                } else if (shape_tok == "column") {
                    w.shape = WindowShape::Column;
                } else if (shape_tok == "ellipse") {
                    w.shape = WindowShape::Ellipse;
                } else {
                    throw ParseError("unknown window shape '" + std::string(shape_tok) + "'", shape_pos);
                }
                w.pos_x = number();
                w.pos_y = number();
                w.size_w = number();
                w.size_h = number();
                if (!w.is_valid()) {
                    throw ParseError("window fractions out of range", shape_pos);
                }
                out.push_back({ kind, w });
                break;
            }
            case NodeKind::Const:
                out.push_back({ kind, number() });
                break;
            default: {
                out.push_back({ kind, {} });
                auto const sig = signature(kind);
                for (auto expected : sig.inputs) {
                    auto const child_pos = (skip_space(), pos_);
                    auto const child_index = out.size();
                    parse_node(out);
                    if (signature(out[child_index].kind).output != expected) {
                        throw ParseError("child of '" + std::string(token(kind)) + "' has the wrong type", child_pos);
                    }
                }
            }
            }
            expect(')');
        }

        static auto lookup(std::string_view head, std::size_t pos) -> NodeKind
        {
            for (int k = 0; k <= static_cast<int>(NodeKind::Const); ++k) {
                auto const kind = static_cast<NodeKind>(k);
                if (token(kind) == head) {
                    return kind;
                }
            }
            throw ParseError("unknown node '" + std::string(head) + "'", pos);
        }

        std::string_view text_;
        std::size_t pos_ { 0 };
    };

    auto dot_label(Node const& node) -> std::string
    {
        std::string label(token(node.kind));
        std::array<char, 64> buf {};
        switch (node.kind) {
        case NodeKind::FilterTerm: {
            auto const& f = node.filter();
            for (std::size_t a = 0; a < Filter::side; ++a) {
                label += "\\n";
                for (std::size_t b = 0; b < Filter::side; ++b) {
                    std::snprintf(buf.data(), buf.size(), b == 0 ? "%.4f" : " %.4f", f(a, b));
                    label += buf.data();
                }
            }
            break;
        }
        case NodeKind::WindowTerm: {
            auto const& w = node.window();
            std::snprintf(buf.data(), buf.size(), "\\n%s pos (%.3f, %.3f)\\nsize %.3f x %.3f", std::string(to_string(w.shape)).c_str(), w.pos_x, w.pos_y, w.size_w, w.size_h);
            label += buf.data();
            break;
        }
        case NodeKind::Const:
            std::snprintf(buf.data(), buf.size(), "\\n%.6g", node.constant());
            label += buf.data();
            break;
        default:
            break;
        }
        return label;
    }

} // namespace

auto to_sexpr(ProgramTree const& tree) -> std::string
{
    std::string out;
    if (!tree.empty()) {
        write_node(out, tree, 0);
    }
    return out;
}

auto parse_program(std::string_view text) -> ProgramTree
{
    auto nodes = Parser(text).parse();
    ProgramTree tree(std::move(nodes));
    if (tree.output_type(0) != ValueType::Double) {
        throw ParseError("program root must produce a double", 0);
    }
    return tree;
}

auto to_dot(ProgramTree const& tree) -> std::string
{
    std::string out = "digraph program {\n  node [shape=box, fontname=\"monospace\"];\n";
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        out += "  n" + std::to_string(i) + " [label=\"" + dot_label(tree.node(i)) + "\"];\n";
    }
    for (std::size_t i = 0; i < tree.node_count(); ++i) {
        for (auto child : tree.children(i)) {
            out += "  n" + std::to_string(i) + " -> n" + std::to_string(child) + ";\n";
        }
    }
    out += "}\n";
    return out;
}

} // namespace memegp
