# Coexistence Lab - PDE Package
