// Copyright 2026 The qsense Authors
// SPDX-License-Identifier: Apache-2.0

fn main() {
    std::process::exit(qsense::cli::main_with_args(std::env::args_os()));
}
