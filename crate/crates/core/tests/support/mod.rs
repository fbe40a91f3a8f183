pub mod guidance_cases;
pub mod irr_oracle;
pub mod planted;
