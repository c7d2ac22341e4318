//! Vertices of the hypercube `H_n`.
//!
//! A state is stored as an integer whose binary expansion, written with `n`
//! digits, reads `x_1 x_2 ... x_n`: meiosis `i` (zero based) lives in integer
//! bit `n - 1 - i`. Natural integer order is therefore the lexicographic order
//! of the binary strings.

use std::fmt;

use crate::error::{Error, Result};

pub type State = u32;

/// Widest hypercube the crate will enumerate.
pub const MAX_WIDTH: usize = 24;

#[inline]
pub fn mask_of(meiosis: usize, width: usize) -> State {
    1 << (width - 1 - meiosis)
}

#[inline]
pub fn hamming(x: State, y: State) -> u32 {
    (x ^ y).count_ones()
}

/// `-` stands for the single vertex of `H_0`.
pub fn format_state(x: State, width: usize) -> String {
    if width == 0 {
        return "-".to_string();
    }
    format!("{:0width$b}", x, width = width)
}

/// Returns the state and its width.
pub fn parse_state(s: &str) -> Result<(State, usize)> {
    if s == "-" {
        return Ok((0, 0));
    }
    if s.is_empty() || s.len() > MAX_WIDTH || !s.bytes().all(|b| b == b'0' || b == b'1') {
        return Err(Error::Parse {
            line: 0,
            msg: format!("`{s}` is not a binary state"),
        });
    }
    let x = State::from_str_radix(s, 2).expect("validated binary");
    Ok((x, s.len()))
}

/// An inheritance vector: bit `i` is 0 when meiosis `i` copied the parent's
/// paternal allele and 1 when it copied the maternal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InheritanceState {
    bits: State,
    width: usize,
}

impl InheritanceState {
    pub fn new(bits: State, width: usize) -> Result<Self> {
        if width > MAX_WIDTH || (width < 32 && bits >> width != 0) {
            return Err(Error::WidthMismatch {
                expected: width,
                got: (32 - bits.leading_zeros()) as usize,
            });
        }
        Ok(InheritanceState { bits, width })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let (bits, width) = parse_state(s)?;
        Ok(InheritanceState { bits, width })
    }

    pub fn bits(self) -> State {
        self.bits
    }

    pub fn width(self) -> usize {
        self.width
    }

    /// Value of meiosis `i`: `false` = paternal allele copied.
    pub fn meiosis(self, i: usize) -> bool {
        self.bits & mask_of(i, self.width) != 0
    }

    pub fn expect_width(self, width: usize) -> Result<Self> {
        if self.width != width {
            return Err(Error::WidthMismatch {
                expected: width,
                got: self.width,
            });
        }
        Ok(self)
    }
}

impl fmt::Display for InheritanceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_state(self.bits, self.width))
    }
}
