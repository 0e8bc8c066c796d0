# Decomposizione di domande con template di ragionamento
