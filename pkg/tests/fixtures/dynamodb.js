import { DocumentClient } from "aws-sdk/clients/dynamodb";

const documentClient = new DocumentClient();
const handler = (req, res) => {
  const params = { TableName: "users", Key: { email: req.body.email } };
  documentClient.query(params, (err, data) => {});
  res.status(200);
};
