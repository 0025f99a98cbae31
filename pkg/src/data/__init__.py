# Coexistence Lab - Data Package
