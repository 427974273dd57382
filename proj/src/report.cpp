#include "ergolab/report.hpp"

#include <cmath>
#include <cstdio>

#include "ergolab/errors.hpp"

namespace ergolab {

JsonValue JsonValue::boolean(bool b) {
    JsonValue v;
    v.type_ = Type::Bool;
    v.b_ = b;
    return v;
}

JsonValue JsonValue::integer(long long i) {
    JsonValue v;
    v.type_ = Type::Int;
    v.i_ = i;
    return v;
}

JsonValue JsonValue::number(double d) {
    JsonValue v;
    v.type_ = Type::Double;
    v.d_ = d;
    return v;
}

JsonValue JsonValue::str(std::string s) {
    JsonValue v;
    v.type_ = Type::String;
    v.s_ = std::move(s);
    return v;
}

JsonValue JsonValue::array() {
    JsonValue v;
    v.type_ = Type::Array;
    return v;
}

JsonValue JsonValue::object() {
    JsonValue v;
    v.type_ = Type::Object;
    return v;
}

JsonValue& JsonValue::set(const std::string& key, JsonValue v) {
    if (type_ != Type::Object) throw StructuralError("set() on a non-object JSON value");
    for (auto& [k, existing] : obj_) {
        if (k == key) {
            existing = std::move(v);
            return *this;
        }
    }
    obj_.emplace_back(key, std::move(v));
    return *this;
}

JsonValue& JsonValue::push(JsonValue v) {
    if (type_ != Type::Array) throw StructuralError("push() on a non-array JSON value");
    arr_.push_back(std::move(v));
    return *this;
}

std::string format_double_17(double v) {
    if (std::isnan(v)) return "\"nan\"";
    if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void escape_into(std::string& out, const std::string& s) {
    out += '"';
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    out += '"';
}

void pad(std::string& out, int indent, int depth) {
    if (indent <= 0) return;
    out += '\n';
    out.append(static_cast<size_t>(indent) * depth, ' ');
}

} // namespace

void JsonValue::write(std::string& out, int indent, int depth) const {
    switch (type_) {
        case Type::Null: out += "null"; break;
        case Type::Bool: out += b_ ? "true" : "false"; break;
        case Type::Int: out += std::to_string(i_); break;
        case Type::Double: out += format_double_17(d_); break;
        case Type::String: escape_into(out, s_); break;
        case Type::Array: {
            if (arr_.empty()) {
                out += "[]";
                break;
            }
            out += '[';
            for (size_t i = 0; i < arr_.size(); ++i) {
                if (i) out += ',';
                pad(out, indent, depth + 1);
                arr_[i].write(out, indent, depth + 1);
            }
            pad(out, indent, depth);
            out += ']';
            break;
        }
        case Type::Object: {
            if (obj_.empty()) {
                out += "{}";
                break;
            }
            out += '{';
            for (size_t i = 0; i < obj_.size(); ++i) {
                if (i) out += ',';
                pad(out, indent, depth + 1);
                escape_into(out, obj_[i].first);
                out += indent > 0 ? ": " : ":";
                obj_[i].second.write(out, indent, depth + 1);
            }
            pad(out, indent, depth);
            out += '}';
            break;
        }
    }
}

std::string JsonValue::dump(int indent) const {
    std::string out;
    write(out, indent, 0);
    out += '\n';
    return out;
}

} // namespace ergolab
