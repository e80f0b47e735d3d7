pub mod arith;
pub mod chars;
pub mod cli;
pub mod fit;
pub mod iwasawa;
pub mod modules;
pub mod padic;
pub mod selfcheck;
pub mod snf;
