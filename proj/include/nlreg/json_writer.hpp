#pragma once

// Hand-rolled JSON emission.  Reports are written here (numbers with 17
// significant digits, object keys in insertion order) and read back with
// any standard JSON parser; non-finite numbers become null since JSON has
// no spelling for them.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "nlreg/errors.hpp"

namespace nlreg {

class JsonWriter {
  public:
    std::string take() {
        if (!stack_.empty()) throw Error("json: unclosed container");
        return std::move(out_);
    }

    JsonWriter& begin_object() { open('{'); return *this; }
    JsonWriter& end_object() { close('}'); return *this; }
    JsonWriter& begin_array() { open('['); return *this; }
    JsonWriter& end_array() { close(']'); return *this; }

    JsonWriter& key(const std::string& k) {
        comma();
        emit_string(k);
        out_ += ':';
        pending_value_ = true;
        return *this;
    }

    JsonWriter& value(double v) {
        comma();
        if (!std::isfinite(v)) {
            out_ += "null";
        } else {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out_ += buf;
        }
        return *this;
    }

    JsonWriter& value(int v) { comma(); out_ += std::to_string(v); return *this; }
    JsonWriter& value(long long v) { comma(); out_ += std::to_string(v); return *this; }
    JsonWriter& value(bool v) { comma(); out_ += v ? "true" : "false"; return *this; }
    JsonWriter& value(const char* s) { comma(); emit_string(s); return *this; }
    JsonWriter& value(const std::string& s) { comma(); emit_string(s); return *this; }
    JsonWriter& null() { comma(); out_ += "null"; return *this; }

    // null when not finite is already the double behavior; this spells an
    // interval bound that may be infinite
    JsonWriter& value_or_null(double v) { return value(v); }

  private:
    void open(char c) {
        comma();
        out_ += c;
        stack_.push_back(c);
        first_.push_back(true);
    }

    void close(char c) {
        if (stack_.empty()) throw Error("json: container underflow");
        stack_.pop_back();
        first_.pop_back();
        out_ += c;
    }

    void comma() {
        if (pending_value_) {
            pending_value_ = false;
            return;
        }
        if (!stack_.empty()) {
            if (!first_.back()) out_ += ',';
            first_.back() = false;
        }
    }

    void emit_string(const std::string& s) {
        out_ += '"';
        for (char ch : s) {
            switch (ch) {
                case '"': out_ += "\\\""; break;
                case '\\': out_ += "\\\\"; break;
                case '\n': out_ += "\\n"; break;
                case '\t': out_ += "\\t"; break;
                case '\r': out_ += "\\r"; break;
                default:
                    if (static_cast<unsigned char>(ch) < 0x20) {
                        char buf[8];
                        std::snprintf(buf, sizeof(buf), "\\u%04x", ch);
                        out_ += buf;
                    } else {
                        out_ += ch;
                    }
            }
        }
        out_ += '"';
    }

    std::string out_;
    std::vector<char> stack_;
    std::vector<bool> first_;
    bool pending_value_ = false;
};

}  // namespace nlreg
