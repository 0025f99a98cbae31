# Coexistence Lab - Utils Package
