#pragma once

#include <memory>

namespace polydawg {

/// Owning pointer with value semantics: copies deep-copy, `==` compares the pointees.
template<typename T>
class Box
{
    std::unique_ptr<T> p_;

    public:
    Box(T value) : p_(std::make_unique<T>(std::move(value))) { }
    Box(const Box &other) : p_(std::make_unique<T>(*other.p_)) { }
    Box(Box&&) noexcept = default;
    Box & operator=(const Box &other) { p_ = std::make_unique<T>(*other.p_); return *this; }
    Box & operator=(Box&&) noexcept = default;
    ~Box() = default;

    T & operator*() { return *p_; }
    const T & operator*() const { return *p_; }
    T * operator->() { return p_.get(); }
    const T * operator->() const { return p_.get(); }

    friend bool operator==(const Box &a, const Box &b) { return *a.p_ == *b.p_; }
};

}
