# Define the order and mapping of certify pipeline stages
STAGE_ORDER = [
    ("Hypotheses", "hypotheses_agent"),
    ("Combined Condition", "corollary_agent"),
    ("Coexistence", "coexistence_agent"),
    ("Invertibility", "invertibility_agent"),
    ("Perturbation", "perturbation_agent"),
]


def get_stage_nodes():
    """Get mapping of stage keys to their functions"""
    # Import stage functions here to avoid circular imports
    from agents.hypotheses import hypotheses_agent
    from agents.corollary import corollary_agent
    from agents.coexistence import coexistence_agent
    from agents.invertibility import invertibility_agent
    from agents.perturbation import perturbation_agent

    return {
        "hypotheses_agent": hypotheses_agent,
        "corollary_agent": corollary_agent,
        "coexistence_agent": coexistence_agent,
        "invertibility_agent": invertibility_agent,
        "perturbation_agent": perturbation_agent,
    }
