# Coexistence Lab - Analysis Package
