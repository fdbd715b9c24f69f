#pragma once

#include <gtest/gtest.h>

#include <functional>

#include "peatwht/error.hpp"

inline void expect_code(peatwht::ErrorCode code, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected " << peatwht::to_string(code);
  } catch (const peatwht::Error& e) {
    EXPECT_EQ(e.code(), code) << e.what();
  }
}
