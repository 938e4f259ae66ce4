#![allow(dead_code)]

pub mod fresnel_file;
pub mod tv_oracle;
