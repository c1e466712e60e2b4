#pragma once

#include <cstdint>
#include <memory>
#include <string_view>
#include <typeinfo>
#include <utility>

#include "splitpipe/errors.hpp"

namespace splitpipe {

// Trait that names a data type for the runtime. Every type stored in a Value
// needs a specialization; split kinds and annotation validation refer to data
// types by these names.
template <typename T>
struct ValueTraits;

template <>
struct ValueTraits<std::int64_t> {
    static constexpr std::string_view type_name = "i64";
};

template <>
struct ValueTraits<double> {
    static constexpr std::string_view type_name = "f64";
};

// Type-erased runtime value with shared-payload semantics: copies of a Value
// refer to the same payload, so mutation through one copy (mut arguments,
// in-place kernels) is visible through all of them.
class Value {
  public:
    Value() = default;

    template <typename T>
    static Value wrap(T v) {
        Value out;
        auto payload = std::make_shared<T>(std::move(v));
        out.identity_ = buffer_identity<T>(*payload);
        out.payload_ = std::move(payload);
        out.type_ = ValueTraits<T>::type_name;
        out.info_ = &typeid(T);
        return out;
    }

    bool empty() const { return payload_ == nullptr; }
    std::string_view type_name() const { return type_; }

    template <typename T>
    bool holds() const {
        return payload_ && info_ && *info_ == typeid(T);
    }

    template <typename T>
    const T& as() const {
        check_access<T>();
        return *static_cast<const T*>(payload_.get());
    }

    // Mutable access to the shared payload. The handle stays const; the
    // payload is shared state, as with shared_ptr.
    template <typename T>
    T& as_mut() const {
        check_access<T>();
        return *static_cast<T*>(payload_.get());
    }

    // Identity of the underlying buffer, used for data-dependency tracking.
    // Types whose payloads share storage (array views) override this via
    // ValueTraits<T>::identity; everything else is identified by payload.
    const void* identity() const { return identity_; }

  private:
    template <typename T>
    void check_access() const {
        if (!payload_)
            raise(Errc::null_data, "access to empty value");
        if (!holds<T>())
            raise(Errc::invalid_argument,
                  "value holds '" + std::string(type_) + "', requested '" +
                      std::string(ValueTraits<T>::type_name) + "'");
    }

    template <typename T>
    static const void* buffer_identity(const T& v) {
        if constexpr (requires { ValueTraits<T>::identity(v); }) {
            return ValueTraits<T>::identity(v);
        } else {
            return static_cast<const void*>(&v);
        }
    }

    std::shared_ptr<void> payload_;
    std::string_view type_;
    const void* identity_ = nullptr;
    const std::type_info* info_ = nullptr;
};

}  // namespace splitpipe
