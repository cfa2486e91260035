pub mod scalar_oracle;
