#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace ergolab {

/// Minimal JSON tree for reports. Objects keep insertion order and doubles
/// are printed with 17 significant digits, so a report built the same way
/// twice is byte-identical.
class JsonValue {
public:
    enum class Type { Null, Bool, Int, Double, String, Array, Object };

    JsonValue() : type_(Type::Null) {}

    static JsonValue null() { return JsonValue(); }
    static JsonValue boolean(bool b);
    static JsonValue integer(long long v);
    static JsonValue number(double v);
    static JsonValue str(std::string s);
    static JsonValue array();
    static JsonValue object();

    Type type() const { return type_; }

    JsonValue& set(const std::string& key, JsonValue v); // object
    JsonValue& push(JsonValue v);                        // array

    std::string dump(int indent = 2) const;

private:
    void write(std::string& out, int indent, int depth) const;

    Type type_;
    bool b_ = false;
    long long i_ = 0;
    double d_ = 0.0;
    std::string s_;
    std::vector<JsonValue> arr_;
    std::vector<std::pair<std::string, JsonValue>> obj_;
};

std::string format_double_17(double v);

} // namespace ergolab
