# Coexistence Lab - Core Package
